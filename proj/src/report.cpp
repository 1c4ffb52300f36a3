#include "advstat/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace advstat {

namespace {

std::string row_sort_name(const AucAggregate& a) {
  return std::string(to_string(a.attack)) + "," + to_string(a.metric);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw FormatError("");
    return v;
  } catch (const std::exception&) {
    throw FormatError(context + ": bad number \"" + s + "\"");
  }
}

int parse_int(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw FormatError("");
    return v;
  } catch (const std::exception&) {
    throw FormatError(context + ": bad integer \"" + s + "\"");
  }
}

}  // namespace

void write_auc_csv(const AucReport& report, const std::filesystem::path& path) {
  std::vector<AucAggregate> rows = report.aggregates;
  std::sort(rows.begin(), rows.end(),
            [](const AucAggregate& a, const AucAggregate& b) {
              return std::tuple(row_sort_name(a), a.sample_size) <
                     std::tuple(row_sort_name(b), b.sample_size);
            });
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << kSchemaLine << '\n'
      << "attack,metric,sample_size,auc_mean_pct,auc_std_pct,cells_pooled,"
         "cells_skipped\n";
  for (const AucAggregate& r : rows) {
    out << to_string(r.attack) << ',' << to_string(r.metric) << ','
        << r.sample_size << ',' << fmt_pct2(r.mean) << ','
        << fmt_pct2(r.stddev) << ',' << r.cells_pooled << ','
        << r.cells_skipped << '\n';
  }
  if (!out.flush()) throw DataError("write failed for " + path.string());
}

void write_trials_csv(const TrialRun& run, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << kSchemaLine << '\n';
  std::vector<CellKey> skipped = run.skipped_cells;
  std::sort(skipped.begin(), skipped.end());
  for (const CellKey& c : skipped) {
    out << "# skipped," << c.class_id << ',' << to_string(c.metric) << ','
        << c.sample_size << ',' << to_string(c.attack) << ','
        << fmt_g17(c.epsilon) << '\n';
  }
  out << "class,metric,sample_size,attack,epsilon,origin,repetition,"
         "distance\n";
  for (const TrialScore& s : run.scores) {
    out << s.class_id << ',' << to_string(s.metric) << ',' << s.sample_size
        << ',' << to_string(s.attack_id) << ',' << fmt_g17(s.epsilon) << ','
        << to_string(s.origin) << ',' << s.repetition << ','
        << fmt_g17(s.distance) << '\n';
  }
  if (!out.flush()) throw DataError("write failed for " + path.string());
}

TrialRun read_trials_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kSchemaLine) {
    throw FormatError(path.string() + ": expected schema line \"" +
                      kSchemaLine + "\"");
  }
  TrialRun run;
  std::size_t line_no = 1;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string context =
        path.filename().string() + ":" + std::to_string(line_no);
    if (line.rfind("# skipped,", 0) == 0) {
      const auto fields = split_csv(line.substr(std::strlen("# skipped,")));
      if (fields.size() != 5) {
        throw FormatError(context + ": malformed skipped-cell comment");
      }
      run.skipped_cells.push_back(
          {attack_from_string(fields[3]), metric_from_string(fields[1]),
           parse_int(fields[2], context), parse_int(fields[0], context),
           parse_double(fields[4], context)});
      continue;
    }
    if (line[0] == '#') continue;
    if (!saw_header) {
      if (line.rfind("class,metric,", 0) != 0) {
        throw FormatError(context + ": expected trials header");
      }
      saw_header = true;
      continue;
    }
    const auto fields = split_csv(line);
    if (fields.size() != 8) {
      throw FormatError(context + ": expected 8 fields, got " +
                        std::to_string(fields.size()));
    }
    TrialScore s;
    s.class_id = parse_int(fields[0], context);
    s.metric = metric_from_string(fields[1]);
    s.sample_size = parse_int(fields[2], context);
    s.attack_id = attack_from_string(fields[3]);
    s.epsilon = parse_double(fields[4], context);
    s.origin = test_origin_from_string(fields[5]);
    s.repetition = parse_int(fields[6], context);
    s.distance = parse_double(fields[7], context);
    if (!(s.distance >= 0.0) || !std::isfinite(s.distance)) {
      throw FormatError(context + ": distance must be finite and >= 0");
    }
    run.scores.push_back(s);
  }
  return run;
}

void write_metadata(const RunMetadata& meta, const std::filesystem::path& path) {
  nlohmann::json obj;
  obj["artifact_version"] = meta.artifact_version;
  obj["config"] = meta.config_snapshot;
  obj["seeds"] = meta.seeds;
  obj["dataset_checksums"] = meta.dataset_checksums;
  nlohmann::json timings = nlohmann::json::array();
  for (const StageTiming& t : meta.timings) {
    timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  }
  obj["timings"] = timings;
  std::ofstream out(path);
  if (!out || !(out << obj.dump(2) << '\n').flush()) {
    throw DataError("cannot write metadata " + path.string());
  }
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char buffer[1 << 16];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001b3ull;
    }
    if (got < static_cast<std::streamsize>(sizeof(buffer))) break;
  }
  return hash;
}

}  // namespace advstat
