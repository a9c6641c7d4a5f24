#include "pfn/context/scenarios.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "pfn/core/error.hpp"
#include "pfn/prior/prior.hpp"

namespace pfn {

const SiteTable& Bid::for_borehole(const std::string& id) const {
  if (!cluster()) return table;
  auto it = per_borehole.find(id);
  require(it != per_borehole.end(), ErrorKind::data, label + " has no table for borehole '" + id + "'");
  return it->second;
}

std::vector<BuiltTask> individual_scenario(const std::vector<Bid>& bids, const SiteTable& site,
                                           const std::vector<std::string>& boreholes, View view, Param target,
                                           const CategoryEncoder& encoder, const ContextOptions& options) {
  std::vector<BuiltTask> out;
  for (const auto& bid : bids) {
    for (const auto& id : boreholes) {
      ContextSpec spec{bid.for_borehole(id), view_features(view, target, false), target, Scenario::individual, {id}};
      spec.bid.label = bid.label + view_suffix(view);
      out.push_back(build_individual(spec, site, id, encoder, options));
    }
  }
  return out;
}

std::vector<BuiltTask> simultaneous_scenario(const std::vector<Bid>& bids, const SiteTable& site,
                                             const std::vector<std::string>& boreholes, View view, Param target,
                                             const CategoryEncoder& encoder, const ContextOptions& options) {
  std::vector<BuiltTask> out;
  for (const auto& bid : bids) {
    if (bid.cluster()) continue;
    ContextSpec spec{bid.table, view_features(view, target, true), target, Scenario::simultaneous, boreholes};
    spec.bid.label = bid.label + view_suffix(view);
    out.push_back(build_simultaneous(spec, site, boreholes, encoder, options));
  }
  return out;
}

std::vector<BuiltTask> imputation_scenario(const Bid& bid, const SiteTable& problem, const CategoryEncoder& encoder,
                                           const ContextOptions& options) {
  std::vector<BuiltTask> out;
  for (const auto& pattern : detect_patterns(problem))
    for (Param target : pattern.missing) out.push_back(build_imputation(bid.table, problem, pattern, target, encoder, options));
  return out;
}

SiteTable hide_target(const SiteTable& complete, const std::vector<std::string>& boreholes, Param target,
                      double fraction, std::uint64_t seed) {
  require(fraction >= 0.0 && fraction <= 1.0, ErrorKind::config, "hide fraction must lie in [0, 1]");
  SiteTable out = complete;
  for (std::size_t b = 0; b < boreholes.size(); ++b) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < out.records.size(); ++i)
      if (out.records[i].borehole_id == boreholes[b] && out.records[i].has(target)) idx.push_back(i);
    if (idx.empty()) continue;
    auto rng = stream_rng(seed, b);
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_hide = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(idx.size())));
    if (idx.size() >= 2) n_hide = std::clamp<std::size_t>(n_hide, 1, idx.size() - 1);
    for (std::size_t k = 0; k < n_hide; ++k) out.records[idx[k]][target].reset();
  }
  return out;
}

namespace {

enum Stream : std::uint64_t { kHide = 1, kGlobal = 2, kPatterns = 3, kRegionA = 4, kRegionB = 5, kBidSample = 6 };

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) { return stream_rng(seed, stream)(); }

bool is_dense_id(const std::string& id, const SynthSiteConfig& cfg) {
  if (id.size() <= cfg.dense_prefix.size() || id.compare(0, cfg.dense_prefix.size(), cfg.dense_prefix) != 0) return false;
  return std::all_of(id.begin() + static_cast<std::ptrdiff_t>(cfg.dense_prefix.size()), id.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

struct VerificationSplit {
  SiteTable local;
  SiteTable observed;
  SiteTable complete;
  std::vector<std::string> targets;
};

// Generates the site, moves stray non-dense boreholes inside the region back to the BID.
VerificationSplit split_site(const SynthSiteConfig& cfg, const Region& region) {
  const auto gen = generate_site_with_truth(cfg);
  VerificationSplit s;
  s.local.label = cfg.site_id;
  s.observed.label = cfg.site_id + "/verification";
  s.complete.label = cfg.site_id + "/verification";
  for (std::size_t i = 0; i < gen.observed.size(); ++i) {
    const auto& o = gen.observed.records[i];
    if (region.contains(o.x, o.y) && is_dense_id(o.borehole_id, cfg)) {
      s.observed.records.push_back(o);
      s.complete.records.push_back(gen.complete.records[i]);
    } else {
      s.local.records.push_back(o);
    }
  }
  require(!s.observed.empty(), ErrorKind::data, "verification region contains no records");
  s.targets = s.observed.borehole_ids();
  return s;
}

SiteTable records_of(const SiteTable& table, const std::set<std::string>& ids, const std::string& label) {
  SiteTable out{label, {}};
  for (const auto& r : table.records)
    if (ids.count(r.borehole_id)) out.records.push_back(r);
  return out;
}

struct Location {
  std::string id;
  double x, y;
};

std::vector<Location> borehole_locations(const SiteTable& t) {
  std::vector<Location> out;
  std::set<std::string> seen;
  for (const auto& r : t.records)
    if (seen.insert(r.borehole_id).second) out.push_back({r.borehole_id, r.x, r.y});
  return out;
}

SiteTable subsample_observed(const SiteTable& t, Param target, Index n, std::uint64_t seed, const std::string& label) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < t.records.size(); ++i)
    if (t.records[i].has(target)) idx.push_back(i);
  require(static_cast<Index>(idx.size()) >= n, ErrorKind::data,
          label + ": only " + std::to_string(idx.size()) + " records with an observed " + name_of(target));
  auto rng = stream_rng(seed, 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(n));
  std::sort(idx.begin(), idx.end());
  SiteTable out{label, {}};
  for (auto i : idx) out.records.push_back(t.records[i]);
  return out;
}

nlohmann::json site_json(const SynthSiteConfig& c) { return c; }

}  // namespace

Bench1Config default_bench1_config() {
  Bench1Config c;
  c.site = default_site_config();
  c.site.site_id = "SITE";
  c.site.dense_region = c.verification;
  c.site.dense_boreholes = 5;
  return c;
}

void to_json(nlohmann::json& j, const Bench1Config& c) {
  j = nlohmann::json{{"site", site_json(c.site)},
                     {"verification", c.verification},
                     {"global_sites", c.global_sites},
                     {"global_boreholes", c.global_boreholes},
                     {"local_v_radius", c.local_v_radius},
                     {"cluster_size", c.cluster_size},
                     {"hide_fraction", c.hide_fraction},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, Bench1Config& c) {
  c = default_bench1_config();
  if (j.contains("verification")) c.verification = j["verification"].get<Region>();
  if (j.contains("site")) {
    c.site = j["site"].get<SynthSiteConfig>();
  } else {
    c.site.dense_region = c.verification;
  }
  c.global_sites = j.value("global_sites", c.global_sites);
  c.global_boreholes = j.value("global_boreholes", c.global_boreholes);
  c.local_v_radius = j.value("local_v_radius", c.local_v_radius);
  c.cluster_size = j.value("cluster_size", c.cluster_size);
  c.hide_fraction = j.value("hide_fraction", c.hide_fraction);
  c.seed = j.value("seed", c.seed);
  require(c.global_sites >= 0 && c.global_boreholes >= 1 && c.cluster_size >= 1 && c.local_v_radius > 0.0,
          ErrorKind::config, "invalid benchmark BID settings");
  require(c.site.dense_boreholes >= 1 && c.site.dense_region.has_value(), ErrorKind::config,
          "benchmark site needs dense verification boreholes");
}

Bench1Data make_bench1(const Bench1Config& cfg) {
  SynthSiteConfig site_cfg = cfg.site;
  site_cfg.seed = cfg.seed;
  const auto split = split_site(site_cfg, cfg.verification);

  Bench1Data d;
  d.boreholes = split.targets;
  // Target boreholes carry the strength test on every record before hiding.
  SiteTable base = split.observed;
  for (std::size_t i = 0; i < base.records.size(); ++i)
    base.records[i][Param::su] = split.complete.records[i][Param::su];
  d.site = hide_target(base, d.boreholes, Param::su, cfg.hide_fraction, derive_seed(cfg.seed, kHide));
  d.truth = split.complete;

  const double cx = 0.5 * (cfg.verification.x0 + cfg.verification.x1);
  const double cy = 0.5 * (cfg.verification.y0 + cfg.verification.y1);
  const auto locations = borehole_locations(split.local);

  Bid cluster{"Cluster-BID", {"Cluster-BID", {}}, {}};
  for (const auto& target : d.boreholes) {
    const auto& first = *std::find_if(d.site.records.begin(), d.site.records.end(),
                                      [&](const BoreholeRecord& r) { return r.borehole_id == target; });
    std::vector<std::pair<double, std::string>> dist;
    for (const auto& l : locations) dist.emplace_back(std::hypot(l.x - first.x, l.y - first.y), l.id);
    std::sort(dist.begin(), dist.end());
    std::set<std::string> ids;
    for (std::size_t k = 0; k < dist.size() && k < static_cast<std::size_t>(cfg.cluster_size); ++k)
      ids.insert(dist[k].second);
    cluster.per_borehole.emplace(target, records_of(split.local, ids, "Cluster-BID:" + target));
  }

  std::set<std::string> near;
  for (const auto& l : locations)
    if (std::hypot(l.x - cx, l.y - cy) <= cfg.local_v_radius) near.insert(l.id);
  Bid local_v{"Local-BID-V", records_of(split.local, near, "Local-BID-V"), {}};
  Bid local{"Local-BID", split.local, {}};
  local.table.label = "Local-BID";

  Bid global{"Global-BID", split.local, {}};
  global.table.label = "Global-BID";
  std::mt19937_64 perturb = stream_rng(cfg.seed, kGlobal);
  std::normal_distribution<double> shift(0.0, 0.25);
  std::uniform_real_distribution<double> factor(0.4, 1.6);
  for (int k = 0; k < cfg.global_sites; ++k) {
    SynthSiteConfig g = default_site_config();
    g.site_id = "G" + std::to_string(k + 1);
    g.n_boreholes = cfg.global_boreholes;
    g.origin_x = 20000.0 + 5000.0 * k;
    g.origin_y = 20000.0;
    for (auto& t : g.trends) {
      t.intercept += shift(perturb);
      t.slope *= factor(perturb);
      t.crust_amp *= factor(perturb) - 0.4;
    }
    g.seed = perturb();
    const auto other = generate_site(g);
    global.table.records.insert(global.table.records.end(), other.records.begin(), other.records.end());
  }
  d.bids = {std::move(cluster), std::move(local_v), std::move(local), std::move(global)};
  return d;
}

Bench2Config default_bench2_config() {
  Bench2Config c;
  c.site = default_bench1_config().site;
  c.patterns = {{Param::su, Param::Eu, Param::sigma_p, Param::Cc, Param::cv},
                {Param::Eu, Param::sigma_p, Param::Cc, Param::cv},
                {Param::sigma_p, Param::Cc, Param::cv},
                {Param::Eu, Param::cv}};
  return c;
}

void to_json(nlohmann::json& j, const Bench2Config& c) {
  nlohmann::json patterns = nlohmann::json::array();
  for (const auto& p : c.patterns) {
    std::vector<std::string> names;
    for (Param q : p) names.emplace_back(name_of(q));
    patterns.push_back(names);
  }
  j = nlohmann::json{{"site", site_json(c.site)},
                     {"verification", c.verification},
                     {"patterns", patterns},
                     {"complete_fraction", c.complete_fraction},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, Bench2Config& c) {
  c = default_bench2_config();
  if (j.contains("verification")) c.verification = j["verification"].get<Region>();
  if (j.contains("site")) {
    c.site = j["site"].get<SynthSiteConfig>();
  } else {
    c.site.dense_region = c.verification;
  }
  if (j.contains("patterns")) {
    c.patterns.clear();
    for (const auto& p : j["patterns"]) {
      std::vector<Param> set;
      for (const auto& n : p) {
        const auto q = param_from_name(n.get<std::string>());
        require(q && is_mechanical(*q), ErrorKind::config, "pattern entries must be mechanical parameters");
        set.push_back(*q);
      }
      require(!set.empty(), ErrorKind::config, "patterns must be non-empty");
      c.patterns.push_back(set);
    }
  }
  c.complete_fraction = j.value("complete_fraction", c.complete_fraction);
  c.seed = j.value("seed", c.seed);
  require(c.complete_fraction >= 0.0 && c.complete_fraction < 1.0, ErrorKind::config,
          "complete_fraction must lie in [0, 1)");
  require(c.site.dense_boreholes >= 1 && c.site.dense_region.has_value(), ErrorKind::config,
          "benchmark site needs dense verification boreholes");
}

Bench2Data make_bench2(const Bench2Config& cfg) {
  require(!cfg.patterns.empty(), ErrorKind::config, "at least one pattern is required");
  std::set<std::vector<Param>> distinct;
  for (auto p : cfg.patterns) {
    std::sort(p.begin(), p.end());
    require(distinct.insert(p).second, ErrorKind::config, "patterns must be distinct");
  }
  SynthSiteConfig site_cfg = cfg.site;
  site_cfg.seed = cfg.seed;
  const auto split = split_site(site_cfg, cfg.verification);

  Bench2Data d;
  d.bid = Bid{"Local-BID", split.local, {}};
  d.bid.table.label = "Local-BID";
  d.truth = split.complete;
  d.problem = split.complete;
  d.problem.label = "problem";

  const std::size_t n = d.problem.size();
  const auto n_complete = static_cast<std::size_t>(std::lround(cfg.complete_fraction * static_cast<double>(n)));
  require(n >= n_complete + cfg.patterns.size(), ErrorKind::data,
          "verification site has too few records for the engineered patterns");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto rng = stream_rng(cfg.seed, kPatterns);
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t k = n_complete; k < n; ++k) {
    const auto& pattern = cfg.patterns[(k - n_complete) % cfg.patterns.size()];
    for (Param p : pattern) d.problem.records[idx[k]][p].reset();
  }
  return d;
}

TwoRegionConfig default_two_region_config(std::uint64_t seed) {
  TwoRegionConfig c;
  c.seed = seed;
  c.region_a = default_site_config();
  c.region_a.site_id = "RA";
  c.region_a.n_boreholes = 30;
  c.region_a.extent_x = 2000.0;
  c.region_a.extent_y = 2000.0;
  c.region_a.dense_region = Region{850.0, 850.0, 1150.0, 1150.0};
  c.region_a.dense_boreholes = 5;

  c.region_b = default_site_config();
  c.region_b.site_id = "RB";
  c.region_b.n_boreholes = 30;
  c.region_b.origin_x = 2000.0;
  c.region_b.extent_x = 2000.0;
  c.region_b.extent_y = 2000.0;
  // Stiffer near-surface clay that hardly gains strength with depth.
  c.region_b.trends[static_cast<std::size_t>(index_of(Param::su))] = DepthTrend{std::log(45.0), 0.004, 0.0, 1.0};
  return c;
}

TwoRegionData make_two_region(const TwoRegionConfig& cfg) {
  require(cfg.bid_rows >= 1, ErrorKind::config, "bid_rows must be >= 1");
  SynthSiteConfig a = cfg.region_a;
  a.seed = derive_seed(cfg.seed, kRegionA);
  SynthSiteConfig b = cfg.region_b;
  b.seed = derive_seed(cfg.seed, kRegionB);
  b.dense_boreholes = 0;
  b.dense_region.reset();
  require(a.dense_region.has_value() && a.dense_boreholes >= 1, ErrorKind::config,
          "region A needs dense verification boreholes");

  const auto split = split_site(a, *a.dense_region);
  TwoRegionData d;
  d.boreholes = split.targets;
  SiteTable base = split.observed;
  for (std::size_t i = 0; i < base.records.size(); ++i)
    base.records[i][Param::su] = split.complete.records[i][Param::su];
  d.site = hide_target(base, d.boreholes, Param::su, cfg.hide_fraction, derive_seed(cfg.seed, kHide));
  d.truth = split.complete;

  const auto sample_seed = derive_seed(cfg.seed, kBidSample);
  d.matched = Bid{"Matched-BID", subsample_observed(split.local, Param::su, cfg.bid_rows, sample_seed, "Matched-BID"), {}};
  d.mismatched =
      Bid{"Mismatched-BID", subsample_observed(generate_site(b), Param::su, cfg.bid_rows, sample_seed, "Mismatched-BID"), {}};
  return d;
}

}  // namespace pfn
