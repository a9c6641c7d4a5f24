#include "common.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "pfn/core/format.hpp"
#include "pfn/core/io.hpp"
#include "pfn/eval/metrics.hpp"
#include "pfn/infer/predict.hpp"

namespace pfn::app {

std::uint64_t resolve_seed(const Flags& flags, const nlohmann::json& config, std::uint64_t fallback) {
  if (flags.seed) return *flags.seed;
  return config.value("seed", fallback);
}

Checkpoint load_model(const Flags& flags, nlohmann::json& config) {
  std::string path;
  if (flags.checkpoint) path = *flags.checkpoint;
  else if (config.contains("checkpoint")) path = config.at("checkpoint").get<std::string>();
  require(!path.empty(), ErrorKind::config, "no checkpoint given (--checkpoint or config \"checkpoint\")");
  require(std::filesystem::exists(path), ErrorKind::io, "checkpoint " + path + " does not exist");
  config["checkpoint"] = path;
  config["checkpoint_fingerprint"] = fingerprint(read_file(path));
  return load_checkpoint(path);
}

Index context_budget(const nlohmann::json& config, const Checkpoint& ckpt) {
  const Index budget = config.value("context_budget", static_cast<Index>(ckpt.prior.max_rows()));
  require(budget >= 1, ErrorKind::config, "context_budget must be positive");
  return budget;
}

int worker_count() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("PFN_SITE_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    require(end != env && *end == '\0' && cap >= 1, ErrorKind::config,
            std::string("PFN_SITE_THREADS must be a positive integer, got '") + env + "'");
    n = std::min<long>(n, cap);
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

std::vector<Prediction> predict_task(const Checkpoint& ckpt, const BuiltTask& task) {
  try {
    return predict(ckpt, task.task);
  } catch (const Error& e) {
    throw Error(e.kind(), "task " + task.info.id + ": " + e.detail());
  }
}

std::string prediction_fields(const Prediction& p, double truth) {
  return fmt_real(truth) + "," + fmt_real(p.mean) + "," + fmt_real(p.q025) + "," + fmt_real(p.q500) + "," +
         fmt_real(p.q975) + "," + (covers(p, truth) ? "1" : "0");
}

std::string file_stem(const std::string& label) {
  std::string s = label;
  for (auto& c : s)
    if (c == '/' || c == '\\' || c == ' ' || c == ':') c = '_';
  return s;
}

}  // namespace pfn::app
