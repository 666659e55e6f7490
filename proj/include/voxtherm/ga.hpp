#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <vector>

#include <json.hpp>

#include "voxtherm/models.hpp"
#include "voxtherm/random.hpp"
#include "voxtherm/scene.hpp"
#include "voxtherm/trainer.hpp"

namespace voxtherm {

struct GaConfig {
  std::size_t population = 20;
  double mutation_rate = 0.01;  // per gene
  double crossover_prob = 0.90;
  std::size_t generations = 25;
  std::size_t elitism = 1;
  std::size_t tournament = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

GaConfig ga_config_from_json(const nlohmann::json& doc);
nlohmann::json ga_config_to_json(const GaConfig& gc);

/// Workload level per split, in scene split order.
using Assignment = std::vector<double>;

/// A chromosome is a permutation of the baseline positions; gene i names the
/// baseline split whose level split i receives. Any permutation carries the
/// baseline multiset, so total work is conserved by construction.
using Chromosome = std::vector<std::size_t>;

Assignment decode(const Chromosome& c, const Assignment& baseline);

/// Partially matched crossover on cut points [a, b). Returns both children.
std::pair<Chromosome, Chromosome> pmx(const Chromosome& p1, const Chromosome& p2, std::size_t a, std::size_t b);

/// Each gene, with probability `rate`, swaps with a uniformly drawn gene.
void swap_mutation(Chromosome& c, double rate, Rng& rng);

using FitnessFn = std::function<double(const Assignment&)>;

/// Memoizes a fitness function by assignment; safe for concurrent callers.
class FitnessCache {
 public:
  explicit FitnessCache(FitnessFn fn) : fn_(std::move(fn)) {}
  double operator()(const Assignment& a);
  std::size_t evaluations() const { return evaluations_; }

 private:
  FitnessFn fn_;
  std::map<Assignment, double> memo_;
  std::mutex mutex_;
  std::size_t evaluations_ = 0;
};

struct GenerationRecord {
  std::size_t generation = 0;  // 1-based
  double best = 0;             // best fitness seen so far
  double mean = 0;             // population mean this generation
};

struct GaResult {
  Assignment best;
  double best_fitness = 0;
  std::vector<GenerationRecord> history;
  std::size_t evaluations = 0;  // distinct assignments evaluated
};

/// Elitist generational GA minimizing `fitness`. Needs at least 2 splits.
GaResult evolve(const Assignment& baseline, FitnessCache& fitness, const GaConfig& gc, std::size_t threads = 0);

struct BaselineResult {
  double mean = 0;
  double min = 0;
  std::vector<Assignment> assignments;
  std::vector<double> fitness;
};

/// k seeded random permutations of the baseline multiset.
BaselineResult baseline_random(const Assignment& baseline, FitnessCache& fitness, std::size_t k,
                               std::uint64_t seed, std::size_t threads = 0);

/// (mean_baseline - best) / mean_baseline x 100.
double reduction_percent(double mean_baseline, double best);

/// Every distinct arrangement of the multiset, lexicographic order.
std::vector<Assignment> enumerate_assignments(Assignment baseline);

// ---- surrogate fitness ------------------------------------------------------

/// Workloads of `base` in scene split order.
Assignment workload_assignment(const Scene& scene, const Scenario& base);
Scenario with_assignment(const Scene& scene, const Scenario& base, const Assignment& a);

/// Predicted heatmap in deg C (unclamped) for an assignment.
Tensor<double> predict_assignment(const Scene& scene, const Scenario& base, const Assignment& a,
                                  const Model<float>& model, const NormStats& stats);

/// (max predicted deg C - 20) / 50; lower is better.
double max_temperature_fitness(const Tensor<double>& celsius);

FitnessFn surrogate_fitness(const Scene& scene, const Scenario& base, const Model<float>& model,
                            const NormStats& stats);

}  // namespace voxtherm
