#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pfn/geodata/records.hpp"
#include "pfn/prior/task.hpp"

namespace pfn {

enum class Scenario { individual, simultaneous, imputation };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

/// Feature granularity: coordinates and depth only, or all soil parameters as well.
enum class View { four = 4, eleven = 11 };

View view_from_int(int v);
/// "/4" or "/11".
std::string view_suffix(View v);

inline constexpr const char* kBoreholeColumn = "borehole_id";

/// Feature columns for a view: x, y, depth, then (11-view) every parameter except the
/// target, then borehole_id when requested.
std::vector<std::string> view_features(View view, Param target, bool with_borehole);

struct ContextSpec {
  SiteTable bid;
  /// Column names: "x", "y", "depth", "borehole_id" or parameter names.
  std::vector<std::string> features;
  Param target = Param::su;
  Scenario scenario = Scenario::individual;
  std::vector<std::string> boreholes;

  /// Contract error when the target is a feature, the subset is empty or a name is unknown.
  void validate() const;
};

/// Integer codes for (site_id, borehole_id), assigned in sorted key order.
class CategoryEncoder {
 public:
  CategoryEncoder() = default;
  explicit CategoryEncoder(const std::vector<const SiteTable*>& tables);

  /// Contract error for a borehole the encoder has not seen.
  double code(const BoreholeRecord& r) const;
  std::size_t size() const { return codes_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, int> codes_;
};

struct ContextOptions {
  /// Training-row budget; BID rows are subsampled to fit. Zero disables truncation.
  Index max_train = 0;
  std::uint64_t seed = 0;
};

/// Manifest entry for one built task.
struct TaskInfo {
  std::string id;
  Scenario scenario = Scenario::individual;
  std::string bid_label;
  std::vector<std::string> boreholes;
  std::vector<Param> pattern;
  Param target = Param::su;
  std::vector<std::string> features;
  Index n_train = 0;
  Index n_test = 0;
  Index bid_rows_available = 0;
  Index bid_rows_used = 0;
  std::optional<std::uint64_t> subsample_seed;
  bool empty_test = false;
};

void to_json(nlohmann::json& j, const TaskInfo& t);

struct BuiltTask {
  Task task;
  TaskInfo info;
  /// Index into the site (or problem) table of each test row.
  std::vector<std::size_t> test_records;
};

/// BID rows with the target observed, plus the borehole's rows: observed target to
/// train, missing target to test.
BuiltTask build_individual(const ContextSpec& spec, const SiteTable& site, const std::string& borehole_id,
                           const CategoryEncoder& encoder, const ContextOptions& options = {});

/// As build_individual over several boreholes at once.
BuiltTask build_simultaneous(const ContextSpec& spec, const SiteTable& site, const std::vector<std::string>& borehole_ids,
                             const CategoryEncoder& encoder, const ContextOptions& options = {});

/// Every row of `table` missing the target becomes a test row; its other rows join the context.
BuiltTask build_fill(const ContextSpec& spec, const SiteTable& table, const CategoryEncoder& encoder,
                     const ContextOptions& options = {});

struct MissingnessPattern {
  /// Missing mechanical parameters, ordered by name.
  std::vector<Param> missing;
  /// Indices of the records with exactly this missing set.
  std::vector<std::size_t> records;

  std::string label() const;
};

/// Incomplete records grouped by their exact missing mechanical set, ordered by the
/// name lists lexicographically.
std::vector<MissingnessPattern> detect_patterns(const SiteTable& records);

/// One imputation task: BID plus problem rows with the target observed as training
/// rows; the pattern's records as test rows, featuring the parameters they still have.
BuiltTask build_imputation(const SiteTable& bid, const SiteTable& problem, const MissingnessPattern& pattern,
                           Param target, const CategoryEncoder& encoder, const ContextOptions& options = {});

}  // namespace pfn
