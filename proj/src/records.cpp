#include "advstat/records.hpp"

#include <fstream>

#include "json.hpp"

namespace advstat {

const char* to_string(Origin o) {
  return o == Origin::original ? "original" : "adversarial";
}

const char* to_string(AttackId a) {
  switch (a) {
    case AttackId::none: return "none";
    case AttackId::fgsm: return "fgsm";
    case AttackId::pgd: return "pgd";
  }
  return "none";
}

Origin origin_from_string(const std::string& s) {
  if (s == "original") return Origin::original;
  if (s == "adversarial") return Origin::adversarial;
  throw FormatError("unknown origin \"" + s + "\"");
}

AttackId attack_from_string(const std::string& s) {
  if (s == "none") return AttackId::none;
  if (s == "fgsm") return AttackId::fgsm;
  if (s == "pgd") return AttackId::pgd;
  throw FormatError("unknown attack_id \"" + s + "\"");
}

void validate_record(const ActivationRecord& r, const std::string& context) {
  if (r.logits.empty()) {
    throw FormatError(context + ": record has empty logits");
  }
  if (r.epsilon < 0.0) {
    throw FormatError(context + ": negative epsilon");
  }
  if (r.origin == Origin::original) {
    if (r.attack_id != AttackId::none || r.epsilon != 0.0) {
      throw FormatError(context +
                        ": original record must have attack_id none and "
                        "epsilon 0");
    }
  } else {
    if (r.predicted_label == r.true_label) {
      throw FormatError(context +
                        ": adversarial record must have predicted_label != "
                        "true_label");
    }
  }
}

void write_records(const std::vector<ActivationRecord>& records,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot open " + path.string() + " for writing");
  }
  for (const ActivationRecord& r : records) {
    out << "{\"logits\":[";
    for (std::size_t i = 0; i < r.logits.size(); ++i) {
      if (i) out << ',';
      out << fmt_g17(r.logits[i]);
    }
    out << "],\"true_label\":" << r.true_label
        << ",\"predicted_label\":" << r.predicted_label << ",\"origin\":\""
        << to_string(r.origin) << "\",\"attack_id\":\""
        << to_string(r.attack_id) << "\",\"epsilon\":" << fmt_g17(r.epsilon)
        << "}\n";
  }
  if (!out.flush()) {
    throw DataError("write failed for " + path.string());
  }
}

std::vector<ActivationRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  std::vector<ActivationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string context = path.filename().string() + ":" +
                                std::to_string(line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(context + ": " + e.what());
    }
    for (const char* key : {"logits", "true_label", "predicted_label",
                            "origin", "attack_id", "epsilon"}) {
      if (!obj.contains(key)) {
        throw FormatError(context + ": missing key \"" + key + "\"");
      }
    }
    ActivationRecord r;
    try {
      r.logits = obj["logits"].get<std::vector<double>>();
      r.true_label = obj["true_label"].get<int>();
      r.predicted_label = obj["predicted_label"].get<int>();
      r.origin = origin_from_string(obj["origin"].get<std::string>());
      r.attack_id = attack_from_string(obj["attack_id"].get<std::string>());
      r.epsilon = obj["epsilon"].get<double>();
    } catch (const FormatError& e) {
      throw FormatError(context + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(context + ": " + e.what());
    }
    validate_record(r, context);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace advstat
