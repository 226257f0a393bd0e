#include "tdlab/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <omp.h>

#include "tdlab/errors.hpp"

namespace tdlab {

CategoricalTable::CategoricalTable(const Mat& rows)
    : n_cols_(static_cast<std::size_t>(rows.cols())),
      cdf_(static_cast<std::size_t>(rows.size())),
      last_positive_(static_cast<std::size_t>(rows.rows()), 0) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      acc += rows(i, j);
      cdf_[static_cast<std::size_t>(i) * n_cols_ + static_cast<std::size_t>(j)] = acc;
      if (rows(i, j) > 0.0) last_positive_[static_cast<std::size_t>(i)] = static_cast<std::size_t>(j);
    }
  }
}

std::size_t CategoricalTable::draw(std::size_t row, double u) const {
  const double* begin = cdf_.data() + row * n_cols_;
  const double* end = begin + n_cols_;
  const double* it = std::upper_bound(begin, end, u);
  if (it == end) return last_positive_[row];
  return static_cast<std::size_t>(it - begin);
}

OnPolicySampler::OnPolicySampler(const InducedMrp& mrp, const Vec& mu)
    : state_(mu.transpose()), next_(mrp.P()), reward_(mrp.r()) {
  if (static_cast<std::size_t>(mu.size()) != mrp.n_states()) {
    throw DimensionMismatch("OnPolicySampler: mu has the wrong length");
  }
}

SampleTuple OnPolicySampler::sample(const RngStream& rng, std::uint64_t step) const {
  SampleTuple out;
  out.s = state_.draw(0, rng.uniform(step, 0));
  out.s_next = next_.draw(out.s, rng.uniform(step, 2));
  out.r = reward_(static_cast<Eigen::Index>(out.s));
  out.rho = 1.0;
  return out;
}

OffPolicySampler::OffPolicySampler(const TabularMdp& mdp, const Policy& target, const Policy& behavior,
                                   const Vec& mu_b)
    : n_actions_(mdp.n_actions()),
      state_(mu_b.transpose()),
      action_(behavior.probs()),
      reward_(mdp.reward()),
      rho_(Mat::Zero(static_cast<Eigen::Index>(mdp.n_states()), static_cast<Eigen::Index>(mdp.n_actions()))) {
  if (target.n_states() != mdp.n_states() || behavior.n_states() != mdp.n_states() ||
      target.n_actions() != mdp.n_actions() || behavior.n_actions() != mdp.n_actions() ||
      static_cast<std::size_t>(mu_b.size()) != mdp.n_states()) {
    throw DimensionMismatch("OffPolicySampler: shapes do not match the MDP");
  }
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    for (std::size_t a = 0; a < n_actions_; ++a) {
      const double pb = behavior(s, a);
      const double pt = target(s, a);
      if (pb > 0.0) {
        rho_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = pt / pb;
      } else if (pt > 0.0 && mu_b(static_cast<Eigen::Index>(s)) > 0.0) {
        throw CoverageViolation("behavior policy never takes action " + std::to_string(a) + " at state " +
                                std::to_string(s) + " but the target policy does");
      }
    }
  }
  next_.reserve(n_actions_);
  for (std::size_t a = 0; a < n_actions_; ++a) next_.emplace_back(mdp.kernel(a));
}

SampleTuple OffPolicySampler::sample(const RngStream& rng, std::uint64_t step) const {
  SampleTuple out;
  out.s = state_.draw(0, rng.uniform(step, 0));
  out.a = action_.draw(out.s, rng.uniform(step, 1));
  out.s_next = next_[out.a].draw(out.s, rng.uniform(step, 2));
  const auto si = static_cast<Eigen::Index>(out.s);
  const auto ai = static_cast<Eigen::Index>(out.a);
  out.r = reward_(si, ai);
  out.rho = rho_(si, ai);
  return out;
}

void SampleFeatures::assign(const SampleTuple& sample, const FeatureMap& features, double discount,
                            SampleMode mode) {
  phi_s = features.row(sample.s).transpose();
  phi_next = features.row(sample.s_next).transpose();
  rho = mode == SampleMode::kOffPolicy ? sample.rho : 1.0;
  reward = sample.r;
  gamma = discount;
}

EmpiricalTerms SampleFeatures::dense() const {
  EmpiricalTerms t;
  t.A = rho * phi_s * (phi_s - gamma * phi_next).transpose();
  t.b = rho * reward * phi_s;
  t.Pi = rho * phi_s * phi_next.transpose();
  t.Sigma = phi_s * phi_s.transpose();
  return t;
}

EmpiricalTerms empirical_terms(const SampleTuple& sample, const FeatureMap& features, double gamma,
                               SampleMode mode) {
  SampleFeatures f;
  f.assign(sample, features, gamma, mode);
  return f.dense();
}

namespace {

// Layout of the flattened term vector: A | b | Pi | Sigma.
Vec pack(const EmpiricalTerms& t) {
  const Eigen::Index d = t.b.size();
  Vec v(3 * d * d + d);
  v.segment(0, d * d) = t.A.reshaped();
  v.segment(d * d, d) = t.b;
  v.segment(d * d + d, d * d) = t.Pi.reshaped();
  v.segment(2 * d * d + d, d * d) = t.Sigma.reshaped();
  return v;
}

EmpiricalTerms unpack(const Vec& v, Eigen::Index d) {
  EmpiricalTerms t;
  t.A = v.segment(0, d * d).reshaped(d, d);
  t.b = v.segment(d * d, d);
  t.Pi = v.segment(d * d + d, d * d).reshaped(d, d);
  t.Sigma = v.segment(2 * d * d + d, d * d).reshaped(d, d);
  return t;
}

struct Accumulator {
  Vec sum;
  Vec sum_sq;
};

void accumulate(const Sampler& sampler, const FeatureMap& features, double gamma, const RngStream& rng,
                std::uint64_t first, std::uint64_t last, Accumulator& acc) {
  SampleFeatures f;
  for (std::uint64_t step = first; step < last; ++step) {
    f.assign(sampler.sample(rng, step), features, gamma, sampler.mode());
    const Vec v = pack(f.dense());
    acc.sum += v;
    acc.sum_sq += v.cwiseAbs2();
  }
}

TermMoments finish(const Accumulator& acc, std::uint64_t n, Eigen::Index d) {
  TermMoments m;
  m.n_samples = n;
  const double nd = static_cast<double>(n);
  const Vec mean = acc.sum / nd;
  Vec var = (acc.sum_sq / nd - mean.cwiseAbs2()).cwiseMax(0.0);
  if (n > 1) var *= nd / (nd - 1.0);
  m.mean = unpack(mean, d);
  m.std_error = unpack((var / nd).cwiseSqrt(), d);
  return m;
}

constexpr std::uint64_t kMomentBlocks = 64;

}  // namespace

TermMoments estimate_term_moments(const Sampler& sampler, const FeatureMap& features, double gamma,
                                  std::uint64_t n_samples, std::uint64_t seed, int workers) {
  const auto d = static_cast<Eigen::Index>(features.dim());
  const Eigen::Index width = 3 * d * d + d;
  const RngStream rng(seed, 0);
  std::vector<Accumulator> blocks(kMomentBlocks, Accumulator{Vec::Zero(width), Vec::Zero(width)});
  const int threads = workers > 0 ? workers : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(kMomentBlocks); ++b) {
    const auto ub = static_cast<std::uint64_t>(b);
    const std::uint64_t first = n_samples * ub / kMomentBlocks;
    const std::uint64_t last = n_samples * (ub + 1) / kMomentBlocks;
    accumulate(sampler, features, gamma, rng, first, last, blocks[ub]);
  }

  Accumulator total{Vec::Zero(width), Vec::Zero(width)};
  for (const auto& blk : blocks) {
    total.sum += blk.sum;
    total.sum_sq += blk.sum_sq;
  }
  return finish(total, n_samples, d);
}

TermMoments estimate_term_moments_serial(const Sampler& sampler, const FeatureMap& features, double gamma,
                                         std::uint64_t n_samples, std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(features.dim());
  const Eigen::Index width = 3 * d * d + d;
  Accumulator acc{Vec::Zero(width), Vec::Zero(width)};
  accumulate(sampler, features, gamma, RngStream(seed, 0), 0, n_samples, acc);
  return finish(acc, n_samples, d);
}

}  // namespace tdlab
