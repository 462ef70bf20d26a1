#pragma once

#include <string>
#include <vector>

namespace ordisco::replaysim {

enum class Strategy { kOfflineS1, kOfflineS2, kOrdiscoOnline };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct UnitCosts {
  long long train_op = 1;   // one training pass on a batch
  long long replay_op = 1;  // one replay sampling pass
  long long store_op = 1;   // one stored generator
};

struct BatchRecord {
  int batch = 0;                 // 1-based
  long long generators_stored = 0;
  long long replay_sample_ops = 0;
  long long train_ops = 0;
};

/// Discrete event ledger for one replay strategy over B incremental batches.
struct CostLedger {
  Strategy strategy = Strategy::kOrdiscoOnline;
  bool inference_each_batch = false;
  std::vector<BatchRecord> records;

  long long cumulative_time() const;   // train + replay ops, all batches
  long long cumulative_replay() const;
  long long final_storage() const;
};

/// S1 stores one generator per batch; S2 keeps one generator but replays
/// samples covering all prior batches (per-batch replay cost proportional to
/// b); the online strategy continually updates one generator with constant
/// per-batch replay. `inference_each_batch` makes S1 replay from every stored
/// generator each batch.
CostLedger simulate(Strategy strategy, int num_batches, UnitCosts costs = {},
                    bool inference_each_batch = false);

enum class ComplexityClass { kConstant, kLinear, kQuadratic };

std::string to_string(ComplexityClass c);

struct ComplexityFit {
  ComplexityClass time = ComplexityClass::kConstant;     // on cumulative cost
  ComplexityClass storage = ComplexityClass::kConstant;  // on per-batch storage
};

/// Least-squares fit of constant/linear/quadratic models; smallest model
/// whose residual vanishes wins.
ComplexityFit fit_complexity(const CostLedger& ledger);

std::string ledger_csv(const CostLedger& ledger);

}  // namespace ordisco::replaysim
