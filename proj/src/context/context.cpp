#include "pfn/context/context.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "pfn/core/error.hpp"
#include "pfn/prior/prior.hpp"

namespace pfn {

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::individual: return "individual";
    case Scenario::simultaneous: return "simultaneous";
    case Scenario::imputation: return "imputation";
  }
  return "";
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "individual") return Scenario::individual;
  if (s == "simultaneous") return Scenario::simultaneous;
  if (s == "imputation") return Scenario::imputation;
  throw Error(ErrorKind::config, "unknown scenario '" + s + "'");
}

View view_from_int(int v) {
  require(v == 4 || v == 11, ErrorKind::config, "view must be 4 or 11");
  return v == 4 ? View::four : View::eleven;
}

std::string view_suffix(View v) { return v == View::four ? "/4" : "/11"; }

std::vector<std::string> view_features(View view, Param target, bool with_borehole) {
  std::vector<std::string> out{"x", "y", "depth"};
  if (view == View::eleven) {
    for (int p = 0; p < kParamCount; ++p)
      if (p != index_of(target)) out.emplace_back(kParamNames[static_cast<std::size_t>(p)]);
  }
  if (with_borehole) out.emplace_back(kBoreholeColumn);
  return out;
}

namespace {

struct Column {
  enum class Kind { x, y, depth, borehole, param } kind = Kind::param;
  Param param = Param::su;
};

Column resolve_column(const std::string& name) {
  if (name == "x") return {Column::Kind::x};
  if (name == "y") return {Column::Kind::y};
  if (name == "depth") return {Column::Kind::depth};
  if (name == kBoreholeColumn) return {Column::Kind::borehole};
  const auto p = param_from_name(name);
  require(p.has_value(), ErrorKind::contract, "unknown feature column '" + name + "'");
  return {Column::Kind::param, *p};
}

}  // namespace

void ContextSpec::validate() const {
  require(!features.empty(), ErrorKind::contract, "feature subset must be non-empty");
  std::set<std::string> seen;
  for (const auto& f : features) {
    const auto c = resolve_column(f);
    require(!(c.kind == Column::Kind::param && c.param == target), ErrorKind::contract,
            std::string("target column '") + name_of(target) + "' cannot also be a feature");
    require(seen.insert(f).second, ErrorKind::contract, "duplicate feature column '" + f + "'");
  }
}

CategoryEncoder::CategoryEncoder(const std::vector<const SiteTable*>& tables) {
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto* t : tables)
    for (const auto& r : t->records) keys.insert({r.site_id, r.borehole_id});
  int next = 0;
  for (const auto& k : keys) codes_.emplace(k, next++);
}

double CategoryEncoder::code(const BoreholeRecord& r) const {
  auto it = codes_.find({r.site_id, r.borehole_id});
  require(it != codes_.end(), ErrorKind::contract,
          "borehole '" + r.site_id + "/" + r.borehole_id + "' is not known to the category encoder");
  return static_cast<double>(it->second);
}

void to_json(nlohmann::json& j, const TaskInfo& t) {
  std::vector<std::string> pattern;
  for (Param p : t.pattern) pattern.emplace_back(name_of(p));
  j = nlohmann::json{{"id", t.id},
                     {"scenario", to_string(t.scenario)},
                     {"bid", t.bid_label},
                     {"boreholes", t.boreholes},
                     {"pattern", pattern},
                     {"target", name_of(t.target)},
                     {"features", t.features},
                     {"n_train", t.n_train},
                     {"n_test", t.n_test},
                     {"bid_rows_available", t.bid_rows_available},
                     {"bid_rows_used", t.bid_rows_used},
                     {"subsample_seed", t.subsample_seed ? nlohmann::json(*t.subsample_seed) : nlohmann::json()},
                     {"empty_test", t.empty_test}};
}

namespace {

// Lays out BID rows, then site training rows, then test rows; subsamples BID rows to the budget.
BuiltTask assemble(const std::vector<std::string>& features, Param target, std::vector<const BoreholeRecord*> bid_rows,
                   const std::vector<const BoreholeRecord*>& site_rows,
                   const std::vector<std::pair<std::size_t, const BoreholeRecord*>>& test_rows,
                   const CategoryEncoder& encoder, const ContextOptions& options, TaskInfo info) {
  std::vector<Column> cols;
  for (const auto& f : features) cols.push_back(resolve_column(f));
  for (const auto& [_, r] : test_rows)
    require(!r->has(target), ErrorKind::contract, "test row has an observed target");

  info.features = features;
  info.target = target;
  info.bid_rows_available = static_cast<Index>(bid_rows.size());
  const auto site_n = site_rows.size();
  if (options.max_train > 0 && bid_rows.size() + site_n > static_cast<std::size_t>(options.max_train)) {
    const std::size_t keep =
        site_n >= static_cast<std::size_t>(options.max_train) ? 0 : static_cast<std::size_t>(options.max_train) - site_n;
    std::vector<std::size_t> idx(bid_rows.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto rng = stream_rng(options.seed, 0);
    for (std::size_t i = 0; i < keep; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    std::vector<const BoreholeRecord*> kept;
    for (auto i : idx) kept.push_back(bid_rows[i]);
    bid_rows = std::move(kept);
    info.subsample_seed = options.seed;
  }
  info.bid_rows_used = static_cast<Index>(bid_rows.size());

  const Index f = static_cast<Index>(cols.size());
  const Index n_train = static_cast<Index>(bid_rows.size() + site_n);
  const Index n_test = static_cast<Index>(test_rows.size());
  require(n_train > 0, ErrorKind::empty_context,
          "task " + info.id + " has no training rows with an observed " + name_of(target));

  BuiltTask out;
  Task& t = out.task;
  t.x_train = MatrixR<double>::Zero(n_train, f);
  t.missing_train = MaskR::Constant(n_train, f, false);
  t.y_train.resize(n_train);
  t.x_test = MatrixR<double>::Zero(n_test, f);
  t.missing_test = MaskR::Constant(n_test, f, false);
  for (const auto& c : cols)
    t.schema.push_back(c.kind == Column::Kind::borehole ? FeatureKind::categorical : FeatureKind::continuous);

  auto fill = [&](MatrixR<double>& x, MaskR& miss, Index row, const BoreholeRecord& r) {
    for (Index c = 0; c < f; ++c) {
      const auto& col = cols[static_cast<std::size_t>(c)];
      switch (col.kind) {
        case Column::Kind::x: x(row, c) = r.x; break;
        case Column::Kind::y: x(row, c) = r.y; break;
        case Column::Kind::depth: x(row, c) = r.depth; break;
        case Column::Kind::borehole: x(row, c) = encoder.code(r); break;
        case Column::Kind::param:
          if (r.has(col.param)) x(row, c) = *r[col.param];
          else miss(row, c) = true;
          break;
      }
    }
  };
  Index row = 0;
  auto add_train = [&](const std::vector<const BoreholeRecord*>& rows) {
    for (const auto* r : rows) {
      fill(t.x_train, t.missing_train, row, *r);
      t.y_train[row] = *(*r)[target];
      ++row;
    }
  };
  add_train(bid_rows);
  add_train(site_rows);
  for (Index i = 0; i < n_test; ++i) {
    const auto& [index, r] = test_rows[static_cast<std::size_t>(i)];
    fill(t.x_test, t.missing_test, i, *r);
    out.test_records.push_back(index);
  }
  t.validate();
  info.n_train = n_train;
  info.n_test = n_test;
  info.empty_test = n_test == 0;
  out.info = std::move(info);
  return out;
}

std::vector<const BoreholeRecord*> observed_rows(const SiteTable& table, Param target) {
  std::vector<const BoreholeRecord*> out;
  for (const auto& r : table.records)
    if (r.has(target)) out.push_back(&r);
  return out;
}

BuiltTask build_for_boreholes(const ContextSpec& spec, const SiteTable& site, const std::vector<std::string>& ids,
                              const CategoryEncoder& encoder, const ContextOptions& options, const std::string& task_id) {
  spec.validate();
  std::set<std::string> wanted(ids.begin(), ids.end());
  require(wanted.size() == ids.size(), ErrorKind::contract, "duplicate borehole id");
  std::set<std::string> found;
  std::vector<const BoreholeRecord*> site_train;
  std::vector<std::pair<std::size_t, const BoreholeRecord*>> test;
  for (std::size_t i = 0; i < site.records.size(); ++i) {
    const auto& r = site.records[i];
    if (!wanted.count(r.borehole_id)) continue;
    found.insert(r.borehole_id);
    if (r.has(spec.target)) site_train.push_back(&r);
    else test.emplace_back(i, &r);
  }
  for (const auto& id : ids) require(found.count(id) > 0, ErrorKind::data, "borehole '" + id + "' not found in site");

  TaskInfo info;
  info.id = task_id;
  info.scenario = spec.scenario;
  info.bid_label = spec.bid.label;
  info.boreholes = ids;
  return assemble(spec.features, spec.target, observed_rows(spec.bid, spec.target), site_train, test, encoder,
                  options, std::move(info));
}

}  // namespace

BuiltTask build_individual(const ContextSpec& spec, const SiteTable& site, const std::string& borehole_id,
                           const CategoryEncoder& encoder, const ContextOptions& options) {
  require(spec.scenario == Scenario::individual, ErrorKind::contract, "spec scenario must be individual");
  return build_for_boreholes(spec, site, {borehole_id}, encoder, options,
                             "individual:" + spec.bid.label + ":" + borehole_id);
}

BuiltTask build_simultaneous(const ContextSpec& spec, const SiteTable& site, const std::vector<std::string>& borehole_ids,
                             const CategoryEncoder& encoder, const ContextOptions& options) {
  require(spec.scenario == Scenario::simultaneous, ErrorKind::contract, "spec scenario must be simultaneous");
  require(borehole_ids.size() >= 2, ErrorKind::contract, "simultaneous prediction needs at least two boreholes");
  return build_for_boreholes(spec, site, borehole_ids, encoder, options, "simultaneous:" + spec.bid.label);
}

BuiltTask build_fill(const ContextSpec& spec, const SiteTable& table, const CategoryEncoder& encoder,
                     const ContextOptions& options) {
  require(!table.empty(), ErrorKind::data, "table " + table.label + " has no records");
  return build_for_boreholes(spec, table, table.borehole_ids(), encoder, options, "fill:" + table.label);
}

std::string MissingnessPattern::label() const {
  std::string s = "{";
  for (std::size_t i = 0; i < missing.size(); ++i) s += (i ? "," : "") + std::string(name_of(missing[i]));
  return s + "}";
}

std::vector<MissingnessPattern> detect_patterns(const SiteTable& records) {
  std::map<std::vector<std::string>, MissingnessPattern> groups;
  for (std::size_t i = 0; i < records.records.size(); ++i) {
    std::vector<Param> missing;
    for (Param p : kMechanical)
      if (!records.records[i].has(p)) missing.push_back(p);
    if (missing.empty()) continue;
    std::sort(missing.begin(), missing.end(),
              [](Param a, Param b) { return std::string(name_of(a)) < std::string(name_of(b)); });
    std::vector<std::string> key;
    for (Param p : missing) key.emplace_back(name_of(p));
    auto& g = groups[key];
    g.missing = missing;
    g.records.push_back(i);
  }
  std::vector<MissingnessPattern> out;
  for (auto& [_, g] : groups) out.push_back(std::move(g));
  return out;
}

BuiltTask build_imputation(const SiteTable& bid, const SiteTable& problem, const MissingnessPattern& pattern,
                           Param target, const CategoryEncoder& encoder, const ContextOptions& options) {
  require(!pattern.missing.empty(), ErrorKind::contract, "pattern has no missing parameters");
  require(std::find(pattern.missing.begin(), pattern.missing.end(), target) != pattern.missing.end(),
          ErrorKind::contract, std::string("target ") + name_of(target) + " is not missing in pattern " + pattern.label());

  std::vector<std::string> features{"x", "y", "depth"};
  for (int p = 0; p < kParamCount; ++p) {
    const auto param = static_cast<Param>(p);
    if (std::find(pattern.missing.begin(), pattern.missing.end(), param) == pattern.missing.end())
      features.emplace_back(name_of(param));
  }
  std::vector<std::pair<std::size_t, const BoreholeRecord*>> test;
  for (auto i : pattern.records) {
    require(i < problem.records.size(), ErrorKind::contract, "pattern record index out of range");
    test.emplace_back(i, &problem.records[i]);
  }
  TaskInfo info;
  info.id = "imputation:" + bid.label + ":" + pattern.label() + ":" + name_of(target);
  info.scenario = Scenario::imputation;
  info.bid_label = bid.label;
  info.pattern = pattern.missing;
  std::set<std::string> holes;
  for (const auto& [_, r] : test) holes.insert(r->borehole_id);
  info.boreholes.assign(holes.begin(), holes.end());
  return assemble(features, target, observed_rows(bid, target), observed_rows(problem, target), test, encoder, options,
                  std::move(info));
}

}  // namespace pfn
