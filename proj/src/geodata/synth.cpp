#include "pfn/geodata/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pfn/core/error.hpp"

namespace pfn {

double DepthTrend::at(double z) const {
  return intercept + slope * z + (crust_amp != 0.0 ? crust_amp * std::exp(-z / crust_depth) : 0.0);
}

void SynthSiteConfig::validate() const {
  require(!site_id.empty(), ErrorKind::config, "site_id must be non-empty");
  require(n_boreholes >= 1, ErrorKind::config, "n_boreholes must be >= 1");
  require(records_per_borehole.lo >= 1 && records_per_borehole.hi >= records_per_borehole.lo, ErrorKind::config,
          "records_per_borehole must be a range with lo >= 1");
  require(extent_x >= 0.0 && extent_y >= 0.0, ErrorKind::config, "extent must be non-negative");
  require(depth_start >= 0.0 && depth_step > 0.0, ErrorKind::config, "depth_start >= 0 and depth_step > 0 required");
  require(depth_jitter >= 0.0 && depth_jitter < depth_step / 2, ErrorKind::config,
          "depth_jitter must lie in [0, depth_step / 2)");
  require(loadings.rows() == kParamCount && loadings.allFinite(), ErrorKind::config,
          "loadings must be a finite 11 x k matrix");
  require(spatial_length > 0.0, ErrorKind::config, "spatial_length must be positive");
  require(dense_boreholes >= 0, ErrorKind::config, "dense_boreholes must be >= 0");
  require(dense_boreholes == 0 || dense_region.has_value(), ErrorKind::config, "dense_boreholes need a dense_region");
  require(!dense_region || (dense_region->x1 >= dense_region->x0 && dense_region->y1 >= dense_region->y0),
          ErrorKind::config, "dense_region is inverted");
  require(dense_boreholes == 0 || dense_prefix != borehole_prefix, ErrorKind::config,
          "dense_prefix must differ from borehole_prefix");
  for (int p = 0; p < kParamCount; ++p) {
    const auto i = static_cast<std::size_t>(p);
    const std::string name = kParamNames[i];
    const auto& t = trends[i];
    require(std::isfinite(t.intercept) && std::isfinite(t.slope) && std::isfinite(t.crust_amp) && t.crust_depth > 0.0,
            ErrorKind::config, name + ": invalid depth trend");
    require(noise_sd[i] >= 0.0 && borehole_sd[i] >= 0.0 && spatial_sd[i] >= 0.0, ErrorKind::config,
            name + ": scales must be non-negative");
    require(missing_rate[i] >= 0.0 && missing_rate[i] < 1.0, ErrorKind::config,
            name + ": missing rate must lie in [0, 1)");
  }
}

SynthSiteConfig default_site_config() {
  SynthSiteConfig c;
  // Per parameter: trend {intercept, slope, crust_amp, crust_depth}, noise, borehole, spatial, missing.
  struct Row {
    DepthTrend trend;
    double noise, borehole, spatial, missing;
  };
  const std::array<Row, kParamCount> rows{{
      {{std::log(93.0), 0.0, -0.04, 2.0}, 0.015, 0.01, 0.01, 0.05},      // Sr
      {{std::log(15.5), 0.004, 0.05, 2.0}, 0.03, 0.02, 0.02, 0.05},      // gamma_t
      {{std::log(2.2), -0.012, -0.2, 2.5}, 0.08, 0.05, 0.06, 0.10},      // e
      {{std::log(75.0), -0.004, 0.0, 1.0}, 0.08, 0.06, 0.08, 0.05},      // LL
      {{std::log(33.0), -0.002, 0.0, 1.0}, 0.07, 0.04, 0.05, 0.05},      // PL
      {{std::log(70.0), -0.010, -0.2, 2.5}, 0.07, 0.05, 0.06, 0.03},     // w
      {{std::log(18.0), 0.045, 0.9, 2.0}, 0.12, 0.12, 0.15, 0.30},       // su
      {{std::log(3000.0), 0.040, 0.8, 2.0}, 0.20, 0.12, 0.12, 0.60},     // Eu
      {{std::log(50.0), 0.040, 0.8, 2.0}, 0.12, 0.10, 0.12, 0.65},       // sigma_p
      {{std::log(0.9), -0.008, -0.2, 2.5}, 0.12, 0.06, 0.06, 0.65},      // Cc
      {{std::log(80.0), 0.010, 0.0, 1.0}, 0.30, 0.10, 0.10, 0.70},       // cv
  }};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    c.trends[i] = rows[i].trend;
    c.noise_sd[i] = rows[i].noise;
    c.borehole_sd[i] = rows[i].borehole;
    c.spatial_sd[i] = rows[i].spatial;
    c.missing_rate[i] = rows[i].missing;
  }
  // Factors: strength/stiffness, plasticity, consolidation.
  c.loadings = MatrixR<double>::Zero(kParamCount, 3);
  auto set = [&](Param p, double f1, double f2, double f3) {
    c.loadings.row(index_of(p)) << f1, f2, f3;
  };
  set(Param::gamma_t, 0.02, 0.0, 0.0);
  set(Param::e, -0.06, 0.05, 0.0);
  set(Param::LL, 0.0, 0.10, 0.0);
  set(Param::PL, 0.0, 0.06, 0.0);
  set(Param::w, -0.05, 0.06, 0.0);
  set(Param::su, 0.15, 0.0, 0.0);
  set(Param::Eu, 0.18, 0.0, 0.05);
  set(Param::sigma_p, 0.14, 0.0, 0.05);
  set(Param::Cc, -0.05, 0.08, 0.05);
  set(Param::cv, 0.0, -0.12, 0.15);
  return c;
}

namespace {

constexpr int kSpatialFeatures = 64;

// Independent generator per purpose so that changing one block leaves the others intact.
enum Stream : std::uint64_t { kPlacement = 1, kSpatial = 2, kBorehole = 3, kRecords = 4, kMissing = 5 };

struct SpatialField {
  // Per parameter: frequencies (M x 2), phases, weights.
  std::array<MatrixR<double>, kParamCount> omega;
  std::array<Eigen::VectorXd, kParamCount> phase;
  std::array<Eigen::VectorXd, kParamCount> weight;

  double at(int p, double x, double y) const {
    const auto i = static_cast<std::size_t>(p);
    double s = 0.0;
    for (int m = 0; m < kSpatialFeatures; ++m)
      s += weight[i](m) * std::cos(omega[i](m, 0) * x + omega[i](m, 1) * y + phase[i](m));
    return s * std::sqrt(2.0 / kSpatialFeatures);
  }
};

SpatialField make_field(const SynthSiteConfig& cfg) {
  auto rng = stream_rng(cfg.seed, kSpatial);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 2.0 * std::numbers::pi);
  SpatialField f;
  for (std::size_t p = 0; p < static_cast<std::size_t>(kParamCount); ++p) {
    f.omega[p].resize(kSpatialFeatures, 2);
    f.phase[p].resize(kSpatialFeatures);
    f.weight[p].resize(kSpatialFeatures);
    for (int m = 0; m < kSpatialFeatures; ++m) {
      f.omega[p](m, 0) = normal(rng) / cfg.spatial_length;
      f.omega[p](m, 1) = normal(rng) / cfg.spatial_length;
      f.phase[p](m) = unit(rng);
      f.weight[p](m) = normal(rng);
    }
  }
  return f;
}

}  // namespace

SynthSite generate_site_with_truth(const SynthSiteConfig& cfg) {
  cfg.validate();
  const auto k = cfg.loadings.cols();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto placement = stream_rng(cfg.seed, kPlacement);
  auto borehole_rng = stream_rng(cfg.seed, kBorehole);
  auto record_rng = stream_rng(cfg.seed, kRecords);
  auto missing_rng = stream_rng(cfg.seed, kMissing);
  const SpatialField field = make_field(cfg);

  SynthSite out;
  out.complete.label = cfg.site_id;
  out.observed.label = cfg.site_id;
  auto make_id = [](const std::string& prefix, int number, int total) {
    const std::string digits = std::to_string(number);
    const auto width = std::to_string(total).size();
    return prefix + std::string(width - std::min(width, digits.size()), '0') + digits;
  };
  for (int b = 0; b < cfg.n_boreholes + cfg.dense_boreholes; ++b) {
    const bool dense = b >= cfg.n_boreholes;
    const std::string id = dense ? make_id(cfg.dense_prefix, b - cfg.n_boreholes + 1, cfg.dense_boreholes)
                                 : make_id(cfg.borehole_prefix, b + 1, cfg.n_boreholes);
    double bx = 0.0, by = 0.0;
    if (dense) {
      bx = round_sig9(cfg.dense_region->x0 + (cfg.dense_region->x1 - cfg.dense_region->x0) * unit(placement));
      by = round_sig9(cfg.dense_region->y0 + (cfg.dense_region->y1 - cfg.dense_region->y0) * unit(placement));
    } else {
      bx = round_sig9(cfg.origin_x + cfg.extent_x * unit(placement));
      by = round_sig9(cfg.origin_y + cfg.extent_y * unit(placement));
    }
    std::uniform_int_distribution<int> count(cfg.records_per_borehole.lo, cfg.records_per_borehole.hi);
    const int n = count(placement);

    std::array<double, kParamCount> offset{};
    for (int p = 0; p < kParamCount; ++p) {
      const auto i = static_cast<std::size_t>(p);
      const double re = normal(borehole_rng);
      offset[i] = cfg.borehole_sd[i] * re + (cfg.spatial_sd[i] > 0.0 ? cfg.spatial_sd[i] * field.at(p, bx, by) : 0.0);
    }

    Eigen::VectorXd factors(k);
    for (int r = 0; r < n; ++r) {
      BoreholeRecord rec;
      rec.site_id = cfg.site_id;
      rec.borehole_id = id;
      rec.x = bx;
      rec.y = by;
      const double jitter = cfg.depth_jitter * (2.0 * unit(record_rng) - 1.0);
      rec.depth = round_sig9(std::max(0.0, cfg.depth_start + cfg.depth_step * r + jitter));
      for (Index f = 0; f < k; ++f) factors(f) = normal(record_rng);
      for (int p = 0; p < kParamCount; ++p) {
        const auto i = static_cast<std::size_t>(p);
        const double eps = normal(record_rng);
        const double log_v =
            cfg.trends[i].at(rec.depth) + offset[i] + cfg.loadings.row(p).dot(factors) + cfg.noise_sd[i] * eps;
        rec.values[i] = round_sig9(std::exp(log_v));
      }
      // Plastic limit cannot exceed liquid limit.
      if (*rec[Param::PL] > *rec[Param::LL]) rec[Param::PL] = rec[Param::LL];
      out.complete.records.push_back(rec);

      for (int p = 0; p < kParamCount; ++p) {
        const auto i = static_cast<std::size_t>(p);
        if (unit(missing_rng) < cfg.missing_rate[i]) rec.values[i].reset();
      }
      out.observed.records.push_back(std::move(rec));
    }
  }
  return out;
}

SiteTable generate_site(const SynthSiteConfig& cfg) { return generate_site_with_truth(cfg).observed; }

std::pair<SiteTable, SiteTable> split_verification(const SiteTable& table, const Region& region) {
  require(region.x1 >= region.x0 && region.y1 >= region.y0, ErrorKind::config, "verification region is inverted");
  std::pair<SiteTable, SiteTable> out{{table.label + "/bid", {}}, {table.label + "/verification", {}}};
  for (const auto& r : table.records) (region.contains(r.x, r.y) ? out.second : out.first).records.push_back(r);
  require(!out.second.empty(), ErrorKind::data, "verification region contains no records");
  return out;
}

void to_json(nlohmann::json& j, const Region& r) { j = nlohmann::json::array({r.x0, r.y0, r.x1, r.y1}); }

void from_json(const nlohmann::json& j, Region& r) {
  require(j.is_array() && j.size() == 4, ErrorKind::config, "region must be [x0, y0, x1, y1]");
  r = Region{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

void to_json(nlohmann::json& j, const SynthSiteConfig& c) {
  nlohmann::json params = nlohmann::json::object();
  for (int p = 0; p < kParamCount; ++p) {
    const auto i = static_cast<std::size_t>(p);
    const auto& t = c.trends[i];
    std::vector<double> load(c.loadings.row(p).data(), c.loadings.row(p).data() + c.loadings.cols());
    params[kParamNames[i]] = {{"trend", {t.intercept, t.slope, t.crust_amp, t.crust_depth}},
                              {"noise_sd", c.noise_sd[i]},
                              {"borehole_sd", c.borehole_sd[i]},
                              {"spatial_sd", c.spatial_sd[i]},
                              {"missing_rate", c.missing_rate[i]},
                              {"loadings", load}};
  }
  j = nlohmann::json{{"site_id", c.site_id},
                     {"n_boreholes", c.n_boreholes},
                     {"records_per_borehole", {c.records_per_borehole.lo, c.records_per_borehole.hi}},
                     {"origin", {c.origin_x, c.origin_y}},
                     {"extent", {c.extent_x, c.extent_y}},
                     {"depth_start", c.depth_start},
                     {"depth_step", c.depth_step},
                     {"depth_jitter", c.depth_jitter},
                     {"spatial_length", c.spatial_length},
                     {"borehole_prefix", c.borehole_prefix},
                     {"dense_boreholes", c.dense_boreholes},
                     {"dense_prefix", c.dense_prefix},
                     {"seed", c.seed},
                     {"params", params}};
  if (c.dense_region) j["dense_region"] = *c.dense_region;
}

void from_json(const nlohmann::json& j, SynthSiteConfig& c) {
  c = default_site_config();
  c.site_id = j.value("site_id", c.site_id);
  c.n_boreholes = j.value("n_boreholes", c.n_boreholes);
  if (j.contains("records_per_borehole"))
    c.records_per_borehole = {j["records_per_borehole"].at(0).get<int>(), j["records_per_borehole"].at(1).get<int>()};
  if (j.contains("origin")) {
    c.origin_x = j["origin"].at(0).get<double>();
    c.origin_y = j["origin"].at(1).get<double>();
  }
  if (j.contains("extent")) {
    c.extent_x = j["extent"].at(0).get<double>();
    c.extent_y = j["extent"].at(1).get<double>();
  }
  c.depth_start = j.value("depth_start", c.depth_start);
  c.depth_step = j.value("depth_step", c.depth_step);
  c.depth_jitter = j.value("depth_jitter", c.depth_jitter);
  c.spatial_length = j.value("spatial_length", c.spatial_length);
  c.borehole_prefix = j.value("borehole_prefix", c.borehole_prefix);
  c.dense_boreholes = j.value("dense_boreholes", c.dense_boreholes);
  c.dense_prefix = j.value("dense_prefix", c.dense_prefix);
  if (j.contains("dense_region") && !j["dense_region"].is_null()) c.dense_region = j["dense_region"].get<Region>();
  c.seed = j.value("seed", c.seed);
  if (j.contains("params")) {
    const auto& params = j["params"];
    require(params.is_object(), ErrorKind::config, "params must be an object keyed by parameter name");
    Index k = c.loadings.cols();
    for (const auto& [name, _] : params.items()) {
      require(param_from_name(name).has_value(), ErrorKind::config, "unknown parameter '" + name + "'");
      if (params[name].contains("loadings")) k = static_cast<Index>(params[name]["loadings"].size());
    }
    if (k != c.loadings.cols()) c.loadings = MatrixR<double>::Zero(kParamCount, k);
    for (const auto& [name, block] : params.items()) {
      const int p = index_of(*param_from_name(name));
      const auto i = static_cast<std::size_t>(p);
      if (block.contains("trend")) {
        const auto& t = block["trend"];
        require(t.is_array() && t.size() == 4, ErrorKind::config, name + ": trend must have 4 entries");
        c.trends[i] = {t[0].get<double>(), t[1].get<double>(), t[2].get<double>(), t[3].get<double>()};
      }
      c.noise_sd[i] = block.value("noise_sd", c.noise_sd[i]);
      c.borehole_sd[i] = block.value("borehole_sd", c.borehole_sd[i]);
      c.spatial_sd[i] = block.value("spatial_sd", c.spatial_sd[i]);
      c.missing_rate[i] = block.value("missing_rate", c.missing_rate[i]);
      if (block.contains("loadings")) {
        const auto load = block["loadings"].get<std::vector<double>>();
        require(static_cast<Index>(load.size()) == k, ErrorKind::config, name + ": loadings length mismatch");
        for (Index f = 0; f < k; ++f) c.loadings(p, f) = load[static_cast<std::size_t>(f)];
      }
    }
  }
  c.validate();
}

}  // namespace pfn
