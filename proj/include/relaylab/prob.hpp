#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "relaylab/errors.hpp"

namespace relaylab {

// Finite symbol alphabet; symbols are 0..size-1.
struct Alphabet {
    std::string name;
    int size = 0;
};

struct Var {
    std::string name;
    Alphabet alpha;
};

// Probabilities below this are exact zeros inside log terms.
inline constexpr double kZeroProb = 1e-15;
// Normalization tolerance for distributions and kernel rows.
inline constexpr double kNormTol = 1e-12;

// Dense joint law over an ordered list of named finite variables.
// Row-major storage, first variable slowest. Immutable after construction.
class JointDistribution {
  public:
    JointDistribution() = default;

    // Validates nonnegativity, unit total mass (1e-12) and name uniqueness.
    JointDistribution(std::vector<Var> vars, std::vector<double> probs);

    static JointDistribution point_mass(std::vector<Var> vars, std::span<const int> symbols);

    const std::vector<Var>& vars() const { return vars_; }
    std::span<const double> probs() const { return probs_; }
    size_t size() const { return probs_.size(); }

    // Position of a named variable; NameError if absent.
    int index_of(const std::string& name) const;
    bool has_var(const std::string& name) const;

    double total_mass() const;

    // Sums out everything not in `keep`; output variable order follows `keep`.
    JointDistribution marginalize(const std::vector<std::string>& keep) const;

    // Shannon entropy of a sub-collection of variables, in nats.
    double entropy(const std::vector<std::string>& subset) const;

    // I(A;B|C) in nats; C may be empty. Sets must be disjoint (ArgumentError)
    // and present (NameError).
    double conditional_mutual_information(const std::vector<std::string>& a,
                                          const std::vector<std::string>& b,
                                          const std::vector<std::string>& c) const;

    JointDistribution renamed(const std::vector<std::string>& names) const;

    double prob_at(std::span<const int> symbols) const;

  private:
    // Marginal values for a subset given by variable positions, without
    // constructing a JointDistribution. Order of `keep_axes` defines output order.
    std::vector<double> marginal_values(const std::vector<int>& keep_axes) const;

    std::vector<Var> vars_;
    std::vector<double> probs_;
};

// Row-stochastic conditional law p(out | given). Storage is given-major:
// probs[row * out_size + out_index].
class ConditionalKernel {
  public:
    ConditionalKernel() = default;

    // Validates nonnegativity and per-row normalization (1e-12).
    ConditionalKernel(std::vector<Var> given, std::vector<Var> out, std::vector<double> probs);

    const std::vector<Var>& given() const { return given_; }
    const std::vector<Var>& out() const { return out_; }
    std::span<const double> probs() const { return probs_; }

    size_t rows() const { return probs_.size() / out_size_; }
    size_t out_size() const { return out_size_; }
    std::span<const double> row(size_t r) const { return {probs_.data() + r * out_size_, out_size_}; }

    ConditionalKernel renamed(const std::vector<std::string>& given_names,
                              const std::vector<std::string>& out_names) const;

    double max_row_sum_deviation() const;

  private:
    std::vector<Var> given_;
    std::vector<Var> out_;
    std::vector<double> probs_;
    size_t out_size_ = 1;
};

// Chain-rule product: extends `roots` by each factor in order. Every factor's
// given-variables must already be present (StructureError otherwise); alphabet
// sizes must agree (ShapeError). Result is validated to unit mass.
JointDistribution compose(const std::vector<ConditionalKernel>& factors, const JointDistribution& roots);

// Uniform law over the given variables.
JointDistribution uniform_joint(std::vector<Var> vars);

// One-variable law from an explicit probability vector.
JointDistribution vector_joint(const Var& v, std::span<const double> probs);

// Outer product of two independent joints.
JointDistribution product_joint(const JointDistribution& a, const JointDistribution& b);

}  // namespace relaylab
