#ifndef PHYLOCP_SUBST_MODEL_HPP
#define PHYLOCP_SUBST_MODEL_HPP

#include <cmath>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>

namespace phylocp {

/// Nucleotide alphabet size. States are encoded A=0, C=1, G=2, T=3.
inline constexpr int kStates = 4;

template <typename Scalar>
using StateVector = Eigen::Matrix<Scalar, kStates, 1>;

template <typename Scalar>
using TransitionMatrix = Eigen::Matrix<Scalar, kStates, kStates>;

/// Jukes-Cantor substitution process.
///
/// `rate` is the total rate of leaving a state, so the generator has
/// off-diagonal entries rate/3 and a branch of length t carries on average
/// rate*t substitutions per site. rate = 0 is accepted and yields identity
/// transitions.
template <typename Scalar = double>
class JukesCantor {
 public:
  explicit JukesCantor(Scalar rate) : rate_(rate)
  {
    if (!(rate >= Scalar(0)) || !std::isfinite(static_cast<double>(rate)))
      throw std::domain_error("substitution rate must be finite and nonnegative");
  }

  Scalar rate() const noexcept { return rate_; }

  /// Probability of the same state and of one specific different state
  /// after a branch of length t.
  std::pair<Scalar, Scalar> same_and_change(Scalar t) const
  {
    if (!(t >= Scalar(0)))
      throw std::domain_error("branch length must be nonnegative");
    using std::exp;
    const Scalar decay = exp(Scalar(-4) / Scalar(3) * rate_ * t);
    return {Scalar(0.25) + Scalar(0.75) * decay, Scalar(0.25) - Scalar(0.25) * decay};
  }

  Scalar transition_prob(Scalar t, int from, int to) const
  {
    if (from < 0 || from >= kStates || to < 0 || to >= kStates)
      throw std::out_of_range("state out of range");
    const auto [same, change] = same_and_change(t);
    return from == to ? same : change;
  }

  /// Row-stochastic matrix P(t) with P(a, b) = Pr(b | a, t).
  TransitionMatrix<Scalar> transition_matrix(Scalar t) const
  {
    const auto [same, change] = same_and_change(t);
    TransitionMatrix<Scalar> p = TransitionMatrix<Scalar>::Constant(change);
    p.diagonal().setConstant(same);
    return p;
  }

  /// Rate matrix; rows sum to zero.
  TransitionMatrix<Scalar> generator() const
  {
    TransitionMatrix<Scalar> q = TransitionMatrix<Scalar>::Constant(rate_ / Scalar(3));
    q.diagonal().setConstant(-rate_);
    return q;
  }

  static StateVector<Scalar> stationary() { return StateVector<Scalar>::Constant(Scalar(1) / Scalar(kStates)); }

 private:
  Scalar rate_;
};

} // namespace phylocp

#endif
