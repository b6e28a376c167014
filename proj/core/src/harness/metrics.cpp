#include "beas/harness/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "beas/error.hpp"

namespace beas::harness {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<MetricsRecord> records_from(
    const std::vector<protocol::RoundReport>& reports) {
  std::vector<MetricsRecord> out;
  for (const auto& r : reports) {
    if (!r.merged) continue;
    MetricsRecord m;
    m.round = r.round;
    m.global_accuracy = r.accuracy;
    m.global_loss = r.loss;
    m.backdoor_accuracy = r.backdoor_accuracy;
    m.blocks_merged = r.blocks_merged;
    m.blocks_rejected = r.blocks_rejected;
    m.fg_min_weight = r.fg_min_weight;
    m.wallclock_ms = r.wallclock_ms;
    out.push_back(m);
  }
  return out;
}

std::string format_metrics(const std::vector<MetricsRecord>& records) {
  std::string out = kMetricsHeader;
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.round) + ',' + num(r.global_accuracy) + ',' +
           num(r.global_loss) + ',' +
           (r.backdoor_accuracy ? num(*r.backdoor_accuracy) : std::string()) + ',' +
           std::to_string(r.blocks_merged) + ',' + std::to_string(r.blocks_rejected) +
           ',' + num(r.fg_min_weight) + ',' + num(r.wallclock_ms) + '\n';
  }
  return out;
}

std::vector<MetricsRecord> parse_metrics(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw IngestionError("metrics csv: unexpected header");
  }
  std::vector<MetricsRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) {
      throw IngestionError("metrics csv line " + std::to_string(lineno) +
                           ": expected 8 fields");
    }
    try {
      MetricsRecord r;
      r.round = std::stoull(f[0]);
      r.global_accuracy = std::stod(f[1]);
      r.global_loss = std::stod(f[2]);
      if (!f[3].empty()) r.backdoor_accuracy = std::stod(f[3]);
      r.blocks_merged = std::stoull(f[4]);
      r.blocks_rejected = std::stoull(f[5]);
      r.fg_min_weight = std::stod(f[6]);
      r.wallclock_ms = std::stod(f[7]);
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw IngestionError("metrics csv line " + std::to_string(lineno) +
                           ": malformed number");
    }
  }
  return out;
}

std::string format_summary(const RunSummary& s) {
  std::string out =
      "dataset,dp,defense,attack,adversaries,global_blocks,final_accuracy,"
      "final_backdoor_accuracy\n";
  out += s.dataset + ',' + s.dp + ',' + s.defense + ',' + s.attack + ',' +
         std::to_string(s.adversaries) + ',' + std::to_string(s.global_blocks) +
         ',' + num(s.final_accuracy) + ',' +
         (s.final_backdoor_accuracy ? num(*s.final_backdoor_accuracy) : std::string()) +
         '\n';
  return out;
}

std::string format_dlg_trace(const attacks::DlgResult& result) {
  std::string out = "iter,match_loss,mse\n";
  for (std::size_t i = 0; i < result.match_loss.size(); ++i) {
    out += std::to_string(i) + ',' + num(result.match_loss[i]) + ',' +
           (i < result.mse.size() ? num(result.mse[i]) : std::string()) + '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error("cannot create directory " + path.parent_path().string() +
                      ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error("write failed for " + path.string());
}

std::filesystem::path write_metrics(const std::vector<MetricsRecord>& records,
                                    const std::filesystem::path& dir) {
  auto path = dir / "metrics.csv";
  write_text(path, format_metrics(records));
  return path;
}

std::filesystem::path write_summary(const RunSummary& summary,
                                    const std::filesystem::path& dir) {
  auto path = dir / "summary.csv";
  write_text(path, format_summary(summary));
  return path;
}

std::filesystem::path write_dlg_trace(const attacks::DlgResult& result,
                                      const std::filesystem::path& dir) {
  auto path = dir / "dlg_trace.csv";
  write_text(path, format_dlg_trace(result));
  return path;
}

}  // namespace beas::harness
