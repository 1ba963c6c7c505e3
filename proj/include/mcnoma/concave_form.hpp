#pragma once

#include <mcnoma/model.hpp>

#include <utility>
#include <vector>

namespace mcnoma {

/// Affine expression c0 + sum coeffs[l] * x[vars[l]] over one subcarrier's
/// local power variables.
template <class Scalar>
struct LinearExpr {
  Vector<Scalar> coeffs;
  Scalar constant{0};

  Scalar eval(const Vector<Scalar>& x_local) const { return constant + coeffs.dot(x_local); }
};

/// One log2(numerator/denominator) summand of the telescoped sum-rate.
template <class Scalar>
struct LogRatioTerm {
  LinearExpr<Scalar> numerator;
  LinearExpr<Scalar> denominator;
};

template <class Scalar>
struct SubcarrierForm {
  Index subcarrier = -1;
  Scalar bandwidth{1};
  std::vector<Index> variables;          // global variable index per local slot
  std::vector<LogRatioTerm<Scalar>> terms;
};

/// The fixed-assignment sum-rate written as a concave sum of log-ratios of
/// affine functions. Downlink telescopes into per-position ratio terms plus
/// one total-power term; uplink collapses to a single term per subcarrier.
template <class Scalar>
class SumRateConcaveForm {
 public:
  SumRateConcaveForm(std::vector<SubcarrierForm<Scalar>> subcarriers,
                     std::vector<std::pair<Index, Index>> variable_pairs)
      : subcarriers_(std::move(subcarriers)), pairs_(std::move(variable_pairs)) {}

  Index num_variables() const { return static_cast<Index>(pairs_.size()); }
  /// (user, subcarrier) of each power variable.
  const std::vector<std::pair<Index, Index>>& variable_pairs() const { return pairs_; }
  const std::vector<SubcarrierForm<Scalar>>& subcarriers() const { return subcarriers_; }

  Scalar value(const Vector<Scalar>& x) const {
    Scalar total(0);
    Vector<Scalar> local;
    for (const auto& sub : subcarriers_) {
      gather(sub, x, local);
      for (const auto& term : sub.terms)
        total += sub.bandwidth * log2_ratio(term.numerator.eval(local) / term.denominator.eval(local));
    }
    return total;
  }

  Vector<Scalar> gradient(const Vector<Scalar>& x) const {
    Vector<Scalar> grad = Vector<Scalar>::Zero(num_variables());
    Vector<Scalar> local;
    for (const auto& sub : subcarriers_) {
      gather(sub, x, local);
      for (const auto& term : sub.terms) {
        const Scalar num = term.numerator.eval(local);
        const Scalar den = term.denominator.eval(local);
        const Scalar scale = sub.bandwidth / std::numbers::ln2_v<Scalar>;
        for (size_t l = 0; l < sub.variables.size(); ++l) {
          grad[sub.variables[l]] +=
              scale * (term.numerator.coeffs[Index(l)] / num - term.denominator.coeffs[Index(l)] / den);
        }
      }
    }
    return grad;
  }

 private:
  static void gather(const SubcarrierForm<Scalar>& sub, const Vector<Scalar>& x, Vector<Scalar>& local) {
    local.resize(static_cast<Index>(sub.variables.size()));
    for (size_t l = 0; l < sub.variables.size(); ++l) local[Index(l)] = x[sub.variables[l]];
  }

  std::vector<SubcarrierForm<Scalar>> subcarriers_;
  std::vector<std::pair<Index, Index>> pairs_;
};

/// Builds the concave sum-rate form for a fixed assignment. Listed users with
/// zero gain or zero cap are dropped; downlink users are ordered by the SIC
/// rule before telescoping so every ratio term has a non-increasing floor pair.
template <class Scalar>
SumRateConcaveForm<Scalar> make_sum_rate_form(const Instance<Scalar>& inst, const Assignment& assignment) {
  if (static_cast<Index>(assignment.users.size()) != inst.num_subcarriers)
    throw std::invalid_argument("assignment must list every subcarrier");

  std::vector<std::pair<Index, Index>> pairs;
  std::vector<SubcarrierForm<Scalar>> forms;

  for (Index n = 0; n < inst.num_subcarriers; ++n) {
    std::vector<Index> users;
    for (Index k : assignment.users[n]) {
      if (k < 0 || k >= inst.num_users) throw std::invalid_argument("assignment user out of range");
      if (std::count(users.begin(), users.end(), k)) throw std::invalid_argument("assignment repeats a user");
      if (inst.gains(k, n) > Scalar(0) && inst.per_subcarrier_caps(k, n) > Scalar(0)) users.push_back(k);
    }
    if (static_cast<Index>(assignment.users[n].size()) > inst.max_multiplexed)
      throw std::invalid_argument("assignment exceeds the multiplexing bound");
    if (users.empty()) continue;

    SubcarrierForm<Scalar> form;
    form.subcarrier = n;
    form.bandwidth = inst.bandwidths(n);

    if (inst.direction == Direction::downlink) {
      users = decoding_order_downlink(inst, n, users);
      const Index m = static_cast<Index>(users.size());
      Vector<Scalar> floors(m);
      for (Index i = 0; i < m; ++i) floors[i] = inst.noises(users[i], n) / inst.gains(users[i], n);

      for (Index i = 0; i + 1 < m; ++i) {
        LogRatioTerm<Scalar> term;
        term.numerator.coeffs = Vector<Scalar>::Zero(m);
        term.denominator.coeffs = Vector<Scalar>::Zero(m);
        for (Index j = i + 1; j < m; ++j) {
          term.numerator.coeffs[j] = Scalar(1);
          term.denominator.coeffs[j] = Scalar(1);
        }
        term.numerator.constant = floors[i + 1];
        term.denominator.constant = floors[i];
        form.terms.push_back(std::move(term));
      }
      LogRatioTerm<Scalar> total;
      total.numerator.coeffs = Vector<Scalar>::Ones(m);
      total.numerator.constant = floors[0];
      total.denominator.coeffs = Vector<Scalar>::Zero(m);
      total.denominator.constant = floors[m - 1];
      form.terms.push_back(std::move(total));
    } else {
      const Index m = static_cast<Index>(users.size());
      LogRatioTerm<Scalar> total;
      total.numerator.coeffs.resize(m);
      for (Index i = 0; i < m; ++i) total.numerator.coeffs[i] = inst.gains(users[i], n);
      total.numerator.constant = inst.noises(users[0], n);
      total.denominator.coeffs = Vector<Scalar>::Zero(m);
      total.denominator.constant = inst.noises(users[0], n);
      form.terms.push_back(std::move(total));
    }

    for (Index k : users) {
      form.variables.push_back(static_cast<Index>(pairs.size()));
      pairs.emplace_back(k, n);
    }
    forms.push_back(std::move(form));
  }

  return SumRateConcaveForm<Scalar>(std::move(forms), std::move(pairs));
}

}  // namespace mcnoma
