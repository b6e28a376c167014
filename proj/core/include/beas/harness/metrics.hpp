#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "beas/attacks.hpp"
#include "beas/protocol.hpp"

namespace beas::harness {

struct MetricsRecord {
  std::uint64_t round = 0;
  double global_accuracy = 0.0;
  double global_loss = 0.0;
  std::optional<double> backdoor_accuracy;
  std::size_t blocks_merged = 0;
  std::size_t blocks_rejected = 0;
  double fg_min_weight = 1.0;
  double wallclock_ms = 0.0;

  bool operator==(const MetricsRecord&) const = default;
};

inline constexpr const char* kMetricsHeader =
    "round,global_accuracy,global_loss,backdoor_accuracy,blocks_merged,"
    "blocks_rejected,fg_min_weight,wallclock_ms";

// One record per merged round, in round order.
std::vector<MetricsRecord> records_from(
    const std::vector<protocol::RoundReport>& reports);

// Numbers are written with 17 significant digits so they reload exactly.
std::string format_metrics(const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> parse_metrics(const std::string& csv);

struct RunSummary {
  std::string dataset;
  std::string dp;
  std::string defense;
  std::string attack;
  std::size_t adversaries = 0;
  std::size_t global_blocks = 0;
  double final_accuracy = 0.0;
  std::optional<double> final_backdoor_accuracy;
};
std::string format_summary(const RunSummary& summary);

std::string format_dlg_trace(const attacks::DlgResult& result);

// Write helpers create `dir` if needed; failures throw Error with the path.
std::filesystem::path write_metrics(const std::vector<MetricsRecord>& records,
                                    const std::filesystem::path& dir);
std::filesystem::path write_summary(const RunSummary& summary,
                                    const std::filesystem::path& dir);
std::filesystem::path write_dlg_trace(const attacks::DlgResult& result,
                                      const std::filesystem::path& dir);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace beas::harness
