#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "goalrec/error.hpp"
#include "goalrec/grid_search.hpp"
#include "goalrec/random.hpp"
#include "goalrec/strips.hpp"

namespace goalrec {

enum class Method { kFC, kRG, kMS };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kFC: return "FC";
    case Method::kRG: return "RG";
    case Method::kMS: return "MS";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "FC" || s == "fc") return Method::kFC;
  if (s == "RG" || s == "rg") return Method::kRG;
  if (s == "MS" || s == "ms") return Method::kMS;
  throw InvalidArgument("unknown method '" + std::string(s) + "' (expected FC, RG or MS)");
}

class AllZeroEvidence : public Error {
 public:
  AllZeroEvidence() : Error("every goal has zero posterior mass") {}
};

struct RecognizerConfig {
  double beta = 1.0;
  std::vector<double> prior;  // empty means uniform

  void validate(std::size_t n_goals) const {
    if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
    if (prior.empty()) return;
    if (prior.size() != n_goals) throw InvalidArgument("prior size does not match goal count");
    double sum = 0.0;
    for (double p : prior) {
      if (!(p >= 0.0)) throw InvalidArgument("prior entries must be non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("prior must sum to 1");
  }

  double prior_of(std::size_t i, std::size_t n_goals) const {
    return prior.empty() ? 1.0 / static_cast<double>(n_goals) : prior[i];
  }
};

/// Cost difference between the cheapest compliant and cheapest non-compliant
/// plan. Infinite values are allowed and follow the limits of the likelihood.
struct CostDelta {
  double value = 0.0;
};

/// P(obs | goal) = e^{-beta*delta} / (1 + e^{-beta*delta}).
///
/// Evaluated as 1 / (1 + e^{beta*delta}), which saturates cleanly at both ends;
/// +inf maps to 0 and -inf to 1.
inline double likelihood(CostDelta delta, double beta) {
  if (delta.value == std::numeric_limits<double>::infinity()) return 0.0;
  if (delta.value == -std::numeric_limits<double>::infinity()) return 1.0;
  return 1.0 / (1.0 + std::exp(beta * delta.value));
}

/// log P(obs | goal) = -log(1 + e^{beta*delta}). Keeps goals apart after the
/// likelihood itself has rounded to 1.
inline double log_likelihood(CostDelta delta, double beta) {
  if (delta.value == std::numeric_limits<double>::infinity()) return -std::numeric_limits<double>::infinity();
  if (delta.value == -std::numeric_limits<double>::infinity()) return 0.0;
  const double x = beta * delta.value;
  return -(std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))));
}

/// Probabilities over goals. `log_weight`, when present, is the unnormalized
/// log posterior and decides the top goal.
struct Posterior : std::vector<double> {
  using std::vector<double>::vector;
  Posterior() = default;
  Posterior(std::vector<double> probs) : std::vector<double>(std::move(probs)) {}
  std::vector<double> log_weight;
};

/// Bayes rule with a normalizing constant. Throws AllZeroEvidence when every
/// goal receives zero mass.
inline Posterior posterior(std::span<const double> likelihoods, const RecognizerConfig& config) {
  const auto n = likelihoods.size();
  if (n == 0) throw InvalidArgument("posterior over an empty goal set");
  config.validate(n);
  Posterior out(n);
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = likelihoods[i] * config.prior_of(i, n);
    norm += out[i];
  }
  if (!(norm > 0.0)) throw AllZeroEvidence();
  for (auto& p : out) p /= norm;
  return out;
}

/// Posterior, with all-zero evidence mapped to the uniform distribution.
inline Posterior posterior_or_uniform(std::span<const double> likelihoods,
                                      const RecognizerConfig& config) {
  try {
    return posterior(likelihoods, config);
  } catch (const AllZeroEvidence&) {
    return Posterior(likelihoods.size(), 1.0 / static_cast<double>(likelihoods.size()));
  }
}

/// Same distribution computed from log likelihoods; `log_weight` is kept.
inline Posterior posterior_from_log(std::span<const double> log_lik, const RecognizerConfig& config) {
  const auto n = log_lik.size();
  if (n == 0) throw InvalidArgument("posterior over an empty goal set");
  config.validate(n);
  constexpr double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> lw(n);
  double top = ninf;
  for (std::size_t i = 0; i < n; ++i) {
    // A uniform prior is left out; adding its log would swamp tiny log likelihoods.
    const double pr = config.prior_of(i, n);
    lw[i] = config.prior.empty() ? log_lik[i] : pr > 0.0 ? log_lik[i] + std::log(pr) : ninf;
    top = std::max(top, lw[i]);
  }
  if (top == ninf) {
    Posterior u(n, 1.0 / static_cast<double>(n));
    return u;
  }
  Posterior out(n);
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) norm += out[i] = std::exp(lw[i] - top);
  for (auto& p : out) p /= norm;
  out.log_weight = std::move(lw);
  return out;
}

/// Indices of the most probable goals.
inline std::vector<std::size_t> top_goals(const Posterior& post) {
  if (post.empty()) throw InvalidArgument("empty distribution");
  const auto& key = post.log_weight.empty() ? static_cast<const std::vector<double>&>(post) : post.log_weight;
  if (key.size() != post.size()) throw InvalidArgument("log weights do not match the distribution");
  const double best = *std::max_element(key.begin(), key.end());
  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < key.size(); ++i)
    if (key[i] == best) tied.push_back(i);
  return tied;
}

/// Top-1 goal with exact ties broken by a uniform draw.
inline std::size_t predict_goal(const Posterior& post, Rng& rng) {
  const auto tied = top_goals(post);
  if (tied.size() == 1) return tied[0];
  return tied[uniform_index(rng, tied.size())];
}

inline CostDelta delta_from_costs(double compliant, double noncompliant) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (compliant == inf) return {inf};
  if (noncompliant == inf) return {-inf};
  return {compliant - noncompliant};
}

/// Grid backend of the compliant/non-compliant cost difference.
inline CostDelta rg_delta(const GridMap& map, Cell s, Cell g, std::span<const Cell> obs) {
  if (obs.empty()) throw InvalidArgument("observation sequence is empty");
  const auto c = constrained_costs(map, s, g, obs);
  return delta_from_costs(c.compliant, c.noncompliant);
}

/// STRIPS backend; the start state is the problem's initial state.
inline CostDelta rg_delta(const StripsProblem& p, std::span<const FluentId> goal,
                          std::span<const ActionId> obs, const SearchLimits& limits = {}) {
  if (obs.empty()) throw InvalidArgument("observation sequence is empty");
  const double c = search_plan(p, goal, obs, PlanMode::kCompliant, limits).cost;
  if (c == std::numeric_limits<double>::infinity()) return {c};
  return delta_from_costs(c, search_plan(p, goal, obs, PlanMode::kNoncompliant, limits).cost);
}

/// Cost-map relaxation: c(n, g) - c(s, g) with n the last observed position.
inline CostDelta ms_delta(const CostField& field, Cell s, Cell n, Cell g) {
  if (!(field.goal() == g)) throw InvalidArgument("cost field belongs to a different goal");
  const double cn = field.at(n);
  const double cs = field.at(s);
  return delta_from_costs(cn, cs);
}

/// Grid recognition problem as seen by the recognizers.
struct NavQuery {
  Cell start;
  std::span<const Cell> goals;
  std::span<const Cell> observations;
};

inline Posterior predict_rg(const GridMap& map, const NavQuery& q, const RecognizerConfig& config) {
  std::vector<double> lik;
  lik.reserve(q.goals.size());
  for (const auto& g : q.goals)
    lik.push_back(log_likelihood(rg_delta(map, q.start, g, q.observations), config.beta));
  return posterior_from_log(lik, config);
}

/// `fields[i]` must be the cost field of `q.goals[i]`.
inline Posterior predict_ms(std::span<const CostField> fields, const NavQuery& q,
                            const RecognizerConfig& config) {
  if (fields.size() != q.goals.size())
    throw MissingPrerequisite("cost fields are required for every goal");
  if (q.observations.empty()) throw InvalidArgument("observation sequence is empty");
  const Cell last = q.observations.back();
  std::vector<double> lik;
  lik.reserve(q.goals.size());
  for (std::size_t i = 0; i < q.goals.size(); ++i)
    lik.push_back(log_likelihood(ms_delta(fields[i], q.start, last, q.goals[i]), config.beta));
  return posterior_from_log(lik, config);
}

inline Posterior predict_rg(const StripsProblem& p, std::span<const FluentSet> goals,
                            std::span<const ActionId> obs, const RecognizerConfig& config,
                            const SearchLimits& limits = {}) {
  std::vector<double> lik;
  lik.reserve(goals.size());
  for (const auto& g : goals) lik.push_back(log_likelihood(rg_delta(p, g, obs, limits), config.beta));
  return posterior_from_log(lik, config);
}

}  // namespace goalrec
