#include "pfn/infer/predict.hpp"

#include <algorithm>
#include <ostream>

#include "pfn/core/format.hpp"
#include "pfn/model/network.hpp"

namespace pfn {

std::vector<Prediction> predict(const Checkpoint& ckpt, const Task& task) {
  GradTape<float> tape;
  tape.set_recording(false);
  const auto p = bind_parameters(tape, ckpt.weights, false);
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(task.n_test()));
  check_capacity(ckpt.model, encode_task(task, ckpt.scaling, 0, 0));
  for (Index begin = 0; begin < task.n_test(); begin += kTestChunk) {
    const Index end = std::min(task.n_test(), begin + kTestChunk);
    const CellGrid grid = encode_task(task, ckpt.scaling, begin, end);
    const MatrixR<double> logits = forward(ckpt.model, p, grid).value().mat().cast<double>();
    for (Index r = 0; r < logits.rows(); ++r) {
      out.push_back(summarize(logits_to_distribution(logits.row(r).transpose(), ckpt.bars, grid.scaling)));
    }
  }
  return out;
}

void write_predictions_csv(std::ostream& os, const std::vector<Prediction>& preds) {
  os << "row_id,mean,q025,q500,q975\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    os << i << ',' << fmt_real(p.mean) << ',' << fmt_real(p.q025) << ',' << fmt_real(p.q500) << ','
       << fmt_real(p.q975) << '\n';
  }
}

nlohmann::json predictions_json(const std::vector<Prediction>& preds) {
  auto arr = nlohmann::json::array();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    nlohmann::json row{{"row_id", i}, {"mean", p.mean}, {"q025", p.q025}, {"q500", p.q500}, {"q975", p.q975}};
    if (p.distribution) row["distribution"] = *p.distribution;
    arr.push_back(std::move(row));
  }
  return arr;
}

}  // namespace pfn
