#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "advstat/common.hpp"

namespace advstat {

enum class Origin { original, adversarial };
enum class AttackId { none, fgsm, pgd };

const char* to_string(Origin o);
const char* to_string(AttackId a);
Origin origin_from_string(const std::string& s);
AttackId attack_from_string(const std::string& s);

// One sample's logit vector plus provenance.
struct ActivationRecord {
  std::vector<double> logits;
  int true_label = 0;
  int predicted_label = 0;
  Origin origin = Origin::original;
  AttackId attack_id = AttackId::none;
  double epsilon = 0.0;

  bool operator==(const ActivationRecord&) const = default;
};

// Throws FormatError when the record violates its invariants:
// original => attack none and epsilon 0; adversarial => predicted != true.
void validate_record(const ActivationRecord& r, const std::string& context);

// Line-delimited JSON, one record per line; logits and epsilon are written
// with 17 significant digits so read(write(r)) == r exactly.
void write_records(const std::vector<ActivationRecord>& records,
                   const std::filesystem::path& path);
std::vector<ActivationRecord> read_records(const std::filesystem::path& path);

}  // namespace advstat
