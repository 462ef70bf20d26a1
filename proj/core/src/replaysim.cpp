#include "ordisco/replaysim.hpp"

#include <Eigen/Dense>
#include <sstream>

#include "ordisco/errors.hpp"

namespace ordisco::replaysim {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kOfflineS1: return "offline_s1";
    case Strategy::kOfflineS2: return "offline_s2";
    case Strategy::kOrdiscoOnline: return "ordisco_online";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "offline_s1" || s == "s1") return Strategy::kOfflineS1;
  if (s == "offline_s2" || s == "s2") return Strategy::kOfflineS2;
  if (s == "ordisco_online" || s == "ordisco") return Strategy::kOrdiscoOnline;
  throw ConfigError("unknown replay strategy: " + s);
}

std::string to_string(ComplexityClass c) {
  switch (c) {
    case ComplexityClass::kConstant: return "O(1)";
    case ComplexityClass::kLinear: return "O(B)";
    case ComplexityClass::kQuadratic: return "O(B^2)";
  }
  return "?";
}

long long CostLedger::cumulative_time() const {
  long long acc = 0;
  for (const auto& r : records) acc += r.train_ops + r.replay_sample_ops;
  return acc;
}

long long CostLedger::cumulative_replay() const {
  long long acc = 0;
  for (const auto& r : records) acc += r.replay_sample_ops;
  return acc;
}

long long CostLedger::final_storage() const {
  return records.empty() ? 0 : records.back().generators_stored;
}

CostLedger simulate(Strategy strategy, int num_batches, UnitCosts costs,
                    bool inference_each_batch) {
  if (num_batches < 1) throw ConfigError("simulate: B must be >= 1");
  CostLedger ledger;
  ledger.strategy = strategy;
  ledger.inference_each_batch = inference_each_batch;
  for (int b = 1; b <= num_batches; ++b) {
    BatchRecord r;
    r.batch = b;
    r.train_ops = costs.train_op;
    switch (strategy) {
      case Strategy::kOfflineS1:
        // One more saved generator per batch; replay once per stored
        // generator when inference runs after each batch.
        r.generators_stored = static_cast<long long>(b) * costs.store_op;
        r.replay_sample_ops =
            (inference_each_batch ? static_cast<long long>(b) : 1) * costs.replay_op;
        break;
      case Strategy::kOfflineS2:
        // Single saved generator, but the replay pass after batch b must
        // cover all b prior batches.
        r.generators_stored = costs.store_op;
        r.replay_sample_ops = static_cast<long long>(b) * costs.replay_op;
        break;
      case Strategy::kOrdiscoOnline:
        r.generators_stored = costs.store_op;
        r.replay_sample_ops = costs.replay_op;
        break;
    }
    ledger.records.push_back(r);
  }
  return ledger;
}

namespace {

ComplexityClass fit_series(const std::vector<double>& y) {
  const int n = static_cast<int>(y.size());
  if (n < 4) throw ConfigError("fit_complexity: need at least 4 data points");
  Eigen::MatrixXd basis(n, 3);
  Eigen::VectorXd target(n);
  for (int i = 0; i < n; ++i) {
    const double b = static_cast<double>(i + 1);
    basis(i, 0) = 1.0;
    basis(i, 1) = b;
    basis(i, 2) = b * b;
    target(i) = y[static_cast<std::size_t>(i)];
  }
  const double scale = std::max(1.0, target.cwiseAbs().maxCoeff());
  for (int order = 0; order < 3; ++order) {
    Eigen::MatrixXd sub = basis.leftCols(order + 1);
    Eigen::VectorXd coef = sub.colPivHouseholderQr().solve(target);
    const double residual = (sub * coef - target).norm();
    if (residual / scale < 1e-9) {
      return order == 0   ? ComplexityClass::kConstant
             : order == 1 ? ComplexityClass::kLinear
                          : ComplexityClass::kQuadratic;
    }
  }
  return ComplexityClass::kQuadratic;
}

}  // namespace

ComplexityFit fit_complexity(const CostLedger& ledger) {
  std::vector<double> cumulative, storage;
  long long acc = 0;
  for (const auto& r : ledger.records) {
    acc += r.train_ops + r.replay_sample_ops;
    cumulative.push_back(static_cast<double>(acc));
    storage.push_back(static_cast<double>(r.generators_stored));
  }
  ComplexityFit fit;
  fit.time = fit_series(cumulative);
  fit.storage = fit_series(storage);
  return fit;
}

std::string ledger_csv(const CostLedger& ledger) {
  std::ostringstream os;
  os << "strategy,batch,generators_stored,replay_sample_ops,train_ops\n";
  for (const auto& r : ledger.records) {
    os << to_string(ledger.strategy) << ',' << r.batch << ',' << r.generators_stored
       << ',' << r.replay_sample_ops << ',' << r.train_ops << '\n';
  }
  return os.str();
}

}  // namespace ordisco::replaysim
