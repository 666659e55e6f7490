#include "voxtherm/ga.hpp"

#include <algorithm>
#include <numeric>

#include "voxtherm/error.hpp"
#include "voxtherm/parallel.hpp"
#include "voxtherm/voxelizer.hpp"

namespace voxtherm {

void GaConfig::validate() const {
  if (population < 2) throw InvalidRange("ga: population must be >= 2");
  if (!(mutation_rate >= 0 && mutation_rate <= 1)) throw InvalidRange("ga: mutation_rate must lie in [0, 1]");
  if (!(crossover_prob >= 0 && crossover_prob <= 1)) throw InvalidRange("ga: crossover_prob must lie in [0, 1]");
  if (generations == 0) throw InvalidRange("ga: generations must be >= 1");
  if (elitism > population) throw InvalidRange("ga: elitism exceeds population");
  if (tournament == 0) throw InvalidRange("ga: tournament must be >= 1");
}

GaConfig ga_config_from_json(const nlohmann::json& doc) {
  GaConfig gc;
  try {
    gc.population = doc.value("population", gc.population);
    gc.mutation_rate = doc.value("mutation_rate", gc.mutation_rate);
    gc.crossover_prob = doc.value("crossover_prob", gc.crossover_prob);
    gc.generations = doc.value("generations", gc.generations);
    gc.elitism = doc.value("elitism", gc.elitism);
    gc.tournament = doc.value("tournament", gc.tournament);
    gc.seed = doc.value("seed", gc.seed);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("ga config: ") + e.what());
  }
  gc.validate();
  return gc;
}

nlohmann::json ga_config_to_json(const GaConfig& gc) {
  return {{"population", gc.population},   {"mutation_rate", gc.mutation_rate},
          {"crossover_prob", gc.crossover_prob}, {"generations", gc.generations},
          {"elitism", gc.elitism},         {"tournament", gc.tournament},
          {"seed", gc.seed}};
}

Assignment decode(const Chromosome& c, const Assignment& baseline) {
  Assignment a(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) a[i] = baseline.at(c[i]);
  return a;
}

std::pair<Chromosome, Chromosome> pmx(const Chromosome& p1, const Chromosome& p2, std::size_t a, std::size_t b) {
  const std::size_t n = p1.size();
  auto child = [n, a, b](const Chromosome& donor, const Chromosome& other) {
    Chromosome c(n);
    std::vector<std::size_t> pos_in_donor(n);
    std::vector<bool> in_segment(n, false);
    for (std::size_t i = 0; i < n; ++i) pos_in_donor[donor[i]] = i;
    for (std::size_t i = a; i < b; ++i) {
      c[i] = donor[i];
      in_segment[donor[i]] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= a && i < b) continue;
      std::size_t g = other[i];
      while (in_segment[g]) g = other[pos_in_donor[g]];
      c[i] = g;
    }
    return c;
  };
  return {child(p1, p2), child(p2, p1)};
}

void swap_mutation(Chromosome& c, double rate, Rng& rng) {
  if (rate <= 0) return;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (rng.bernoulli(rate)) std::swap(c[i], c[rng.below(c.size())]);
  }
}

double FitnessCache::operator()(const Assignment& a) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = memo_.find(a); it != memo_.end()) return it->second;
  }
  const double f = fn_(a);
  std::lock_guard<std::mutex> lock(mutex_);
  if (memo_.emplace(a, f).second) ++evaluations_;
  return f;
}

namespace {

std::vector<double> evaluate_all(const std::vector<Assignment>& items, FitnessCache& fitness, std::size_t threads) {
  // Distinct assignments first so no two workers compute the same one.
  std::vector<Assignment> unique(items);
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  parallel_for(unique.size(), threads, [&](std::size_t i) { fitness(unique[i]); });
  std::vector<double> out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) out[i] = fitness(items[i]);
  return out;
}

}  // namespace

GaResult evolve(const Assignment& baseline, FitnessCache& fitness, const GaConfig& gc, std::size_t threads) {
  gc.validate();
  if (baseline.size() < 2) throw ValidationError("ga: need at least 2 splits");
  const std::size_t nt = threads ? threads : default_thread_count();
  const std::size_t n = baseline.size();
  Rng rng(gc.seed);

  std::vector<Chromosome> pop(gc.population);
  for (auto& c : pop) c = rng.permutation(n);

  GaResult result;
  bool have_best = false;
  for (std::size_t gen = 1; gen <= gc.generations; ++gen) {
    std::vector<Assignment> decoded(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) decoded[i] = decode(pop[i], baseline);
    const auto fit = evaluate_all(decoded, fitness, nt);

    std::vector<std::size_t> rank(pop.size());
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return fit[a] < fit[b]; });
    if (!have_best || fit[rank[0]] < result.best_fitness) {
      result.best_fitness = fit[rank[0]];
      result.best = decoded[rank[0]];
      have_best = true;
    }
    const double mean = std::accumulate(fit.begin(), fit.end(), 0.0) / static_cast<double>(fit.size());
    result.history.push_back({gen, result.best_fitness, mean});
    if (gen == gc.generations) break;

    auto select = [&]() -> const Chromosome& {
      std::size_t best = rng.below(pop.size());
      for (std::size_t k = 1; k < gc.tournament; ++k) {
        const std::size_t c = rng.below(pop.size());
        if (fit[c] < fit[best] || (fit[c] == fit[best] && c < best)) best = c;
      }
      return pop[best];
    };

    std::vector<Chromosome> next;
    next.reserve(gc.population);
    for (std::size_t e = 0; e < gc.elitism; ++e) next.push_back(pop[rank[e]]);
    while (next.size() < gc.population) {
      Chromosome c1 = select(), c2 = select();
      if (rng.bernoulli(gc.crossover_prob)) {
        std::size_t a = rng.below(n + 1), b = rng.below(n + 1);
        if (a > b) std::swap(a, b);
        std::tie(c1, c2) = pmx(c1, c2, a, b);
      }
      swap_mutation(c1, gc.mutation_rate, rng);
      swap_mutation(c2, gc.mutation_rate, rng);
      next.push_back(std::move(c1));
      if (next.size() < gc.population) next.push_back(std::move(c2));
    }
    pop = std::move(next);
  }
  result.evaluations = fitness.evaluations();
  return result;
}

BaselineResult baseline_random(const Assignment& baseline, FitnessCache& fitness, std::size_t k, std::uint64_t seed,
                               std::size_t threads) {
  if (k == 0) throw InvalidRange("baseline: k must be >= 1");
  Rng rng(seed);
  BaselineResult r;
  for (std::size_t i = 0; i < k; ++i) r.assignments.push_back(decode(rng.permutation(baseline.size()), baseline));
  r.fitness = evaluate_all(r.assignments, fitness, threads ? threads : default_thread_count());
  r.mean = std::accumulate(r.fitness.begin(), r.fitness.end(), 0.0) / static_cast<double>(k);
  r.min = *std::min_element(r.fitness.begin(), r.fitness.end());
  return r;
}

double reduction_percent(double mean_baseline, double best) {
  return (mean_baseline - best) / mean_baseline * 100.0;
}

std::vector<Assignment> enumerate_assignments(Assignment baseline) {
  std::sort(baseline.begin(), baseline.end());
  std::vector<Assignment> out;
  do {
    out.push_back(baseline);
  } while (std::next_permutation(baseline.begin(), baseline.end()));
  return out;
}

// ---- surrogate fitness ------------------------------------------------------

Assignment workload_assignment(const Scene& scene, const Scenario& base) {
  Assignment a;
  for (const auto& id : scene.split_ids()) {
    auto it = base.workload.find(id);
    if (it == base.workload.end()) throw MissingEntry("scenario has no workload for '" + id + "'");
    a.push_back(it->second);
  }
  return a;
}

Scenario with_assignment(const Scene& scene, const Scenario& base, const Assignment& a) {
  const auto ids = scene.split_ids();
  if (a.size() != ids.size()) {
    throw ShapeMismatch("assignment has " + std::to_string(a.size()) + " levels for " + std::to_string(ids.size()) +
                        " splits");
  }
  Scenario s = base;
  for (std::size_t i = 0; i < ids.size(); ++i) s.workload[ids[i]] = a[i];
  return s;
}

Tensor<double> predict_assignment(const Scene& scene, const Scenario& base, const Assignment& a,
                                  const Model<float>& model, const NormStats& stats) {
  return predict_celsius(model, stats, voxelize(scene, with_assignment(scene, base, a)).data);
}

double max_temperature_fitness(const Tensor<double>& celsius) {
  if (celsius.empty()) throw ShapeMismatch("fitness: empty heatmap");
  return normalize_temperature(*std::max_element(celsius.data().begin(), celsius.data().end()));
}

FitnessFn surrogate_fitness(const Scene& scene, const Scenario& base, const Model<float>& model,
                            const NormStats& stats) {
  return [&scene, base, &model, &stats](const Assignment& a) {
    return max_temperature_fitness(predict_assignment(scene, base, a, model, stats));
  };
}

}  // namespace voxtherm
