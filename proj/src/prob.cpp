#include "relaylab/prob.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "relaylab/kernels.hpp"

namespace relaylab {

namespace {

size_t shape_size(const std::vector<Var>& vars) {
    size_t n = 1;
    for (const auto& v : vars) {
        if (v.alpha.size < 1) throw ValidationError("alphabet size must be >= 1: " + v.name);
        n *= static_cast<size_t>(v.alpha.size);
    }
    return n;
}

void check_unique_names(const std::vector<Var>& vars) {
    std::unordered_set<std::string> seen;
    for (const auto& v : vars) {
        if (!seen.insert(v.name).second) throw StructureError("duplicate variable name: " + v.name);
    }
}

// Mixed-radix odometer walking a dense array in storage order while tracking
// a projected index built from per-axis strides (stride 0 = axis summed out).
struct Odometer {
    std::vector<int> sizes;
    std::vector<size_t> strides;  // projected-index stride per axis
    std::vector<int> digits;
    size_t projected = 0;

    Odometer(std::vector<int> sz, std::vector<size_t> st)
        : sizes(std::move(sz)), strides(std::move(st)), digits(sizes.size(), 0) {}

    void advance() {
        for (int ax = static_cast<int>(sizes.size()) - 1; ax >= 0; --ax) {
            projected += strides[ax];
            if (++digits[ax] < sizes[ax]) return;
            digits[ax] = 0;
            projected -= strides[ax] * static_cast<size_t>(sizes[ax]);
        }
    }
};

}  // namespace

JointDistribution::JointDistribution(std::vector<Var> vars, std::vector<double> probs)
    : vars_(std::move(vars)), probs_(std::move(probs)) {
    check_unique_names(vars_);
    if (probs_.size() != shape_size(vars_)) throw ShapeError("probability array does not match variable shape");
    for (double p : probs_) {
        if (p < 0.0 || !std::isfinite(p)) throw ValidationError("negative or non-finite probability entry");
    }
    const double mass = kernels::sum(probs_.data(), probs_.size());
    if (std::fabs(mass - 1.0) > kNormTol) {
        throw ValidationError("joint distribution mass " + std::to_string(mass) + " deviates from 1");
    }
}

JointDistribution JointDistribution::point_mass(std::vector<Var> vars, std::span<const int> symbols) {
    size_t idx = 0;
    for (size_t i = 0; i < vars.size(); ++i) {
        if (symbols[i] < 0 || symbols[i] >= vars[i].alpha.size) throw ArgumentError("point mass symbol out of range");
        idx = idx * static_cast<size_t>(vars[i].alpha.size) + static_cast<size_t>(symbols[i]);
    }
    std::vector<double> p(shape_size(vars), 0.0);
    p[idx] = 1.0;
    return JointDistribution(std::move(vars), std::move(p));
}

int JointDistribution::index_of(const std::string& name) const {
    for (size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i].name == name) return static_cast<int>(i);
    }
    throw NameError("unknown variable: " + name);
}

bool JointDistribution::has_var(const std::string& name) const {
    return std::any_of(vars_.begin(), vars_.end(), [&](const Var& v) { return v.name == name; });
}

double JointDistribution::total_mass() const { return kernels::sum(probs_.data(), probs_.size()); }

std::vector<double> JointDistribution::marginal_values(const std::vector<int>& keep_axes) const {
    // Output strides in keep order (last kept axis fastest).
    std::vector<size_t> out_stride(vars_.size(), 0);
    size_t out_size = 1;
    for (auto it = keep_axes.rbegin(); it != keep_axes.rend(); ++it) {
        out_stride[static_cast<size_t>(*it)] = out_size;
        out_size *= static_cast<size_t>(vars_[static_cast<size_t>(*it)].alpha.size);
    }

    // Fast path: kept axes are a prefix in storage order, rest is a
    // contiguous trailing block per output cell.
    bool prefix = keep_axes.size() <= vars_.size();
    for (size_t i = 0; prefix && i < keep_axes.size(); ++i) prefix = keep_axes[i] == static_cast<int>(i);
    std::vector<double> out(out_size, 0.0);
    if (prefix) {
        const size_t block = probs_.size() / std::max<size_t>(out_size, 1);
        kernels::sum_blocks(probs_.data(), out_size, block, out.data());
        return out;
    }

    std::vector<int> sizes(vars_.size());
    for (size_t i = 0; i < vars_.size(); ++i) sizes[i] = vars_[i].alpha.size;
    Odometer od(std::move(sizes), std::move(out_stride));
    for (double p : probs_) {
        out[od.projected] += p;
        od.advance();
    }
    return out;
}

JointDistribution JointDistribution::marginalize(const std::vector<std::string>& keep) const {
    std::vector<int> axes;
    axes.reserve(keep.size());
    std::unordered_set<int> seen;
    for (const auto& name : keep) {
        int ax = index_of(name);
        if (!seen.insert(ax).second) throw ArgumentError("variable listed twice in keep: " + name);
        axes.push_back(ax);
    }
    std::vector<Var> out_vars;
    out_vars.reserve(axes.size());
    for (int ax : axes) out_vars.push_back(vars_[static_cast<size_t>(ax)]);
    JointDistribution out;
    out.vars_ = std::move(out_vars);
    out.probs_ = marginal_values(axes);
    return out;
}

double JointDistribution::entropy(const std::vector<std::string>& subset) const {
    if (subset.empty()) return 0.0;
    std::vector<int> axes;
    axes.reserve(subset.size());
    std::unordered_set<int> seen;
    for (const auto& name : subset) {
        int ax = index_of(name);
        if (!seen.insert(ax).second) throw ArgumentError("variable listed twice: " + name);
        axes.push_back(ax);
    }
    // Entropy is order-invariant; sort axes so the prefix fast path can fire.
    std::sort(axes.begin(), axes.end());
    const std::vector<double> m = marginal_values(axes);
    return kernels::neg_plogp_sum(m.data(), m.size());
}

double JointDistribution::conditional_mutual_information(const std::vector<std::string>& a,
                                                         const std::vector<std::string>& b,
                                                         const std::vector<std::string>& c) const {
    std::unordered_set<std::string> seen;
    for (const auto* group : {&a, &b, &c}) {
        for (const auto& name : *group) {
            index_of(name);
            if (!seen.insert(name).second) throw ArgumentError("overlapping variable sets in CMI: " + name);
        }
    }
    auto join = [](const std::vector<std::string>& u, const std::vector<std::string>& v) {
        std::vector<std::string> w = u;
        w.insert(w.end(), v.begin(), v.end());
        return w;
    };
    const double h_ac = entropy(join(a, c));
    const double h_bc = entropy(join(b, c));
    const double h_abc = entropy(join(join(a, b), c));
    const double h_c = entropy(c);
    return h_ac + h_bc - h_abc - h_c;
}

JointDistribution JointDistribution::renamed(const std::vector<std::string>& names) const {
    if (names.size() != vars_.size()) throw ArgumentError("rename list size mismatch");
    JointDistribution out = *this;
    for (size_t i = 0; i < names.size(); ++i) out.vars_[i].name = names[i];
    check_unique_names(out.vars_);
    return out;
}

double JointDistribution::prob_at(std::span<const int> symbols) const {
    if (symbols.size() != vars_.size()) throw ArgumentError("symbol tuple size mismatch");
    size_t idx = 0;
    for (size_t i = 0; i < vars_.size(); ++i) {
        if (symbols[i] < 0 || symbols[i] >= vars_[i].alpha.size) throw ArgumentError("symbol out of range");
        idx = idx * static_cast<size_t>(vars_[i].alpha.size) + static_cast<size_t>(symbols[i]);
    }
    return probs_[idx];
}

ConditionalKernel::ConditionalKernel(std::vector<Var> given, std::vector<Var> out, std::vector<double> probs)
    : given_(std::move(given)), out_(std::move(out)), probs_(std::move(probs)) {
    std::vector<Var> all = given_;
    all.insert(all.end(), out_.begin(), out_.end());
    check_unique_names(all);
    out_size_ = shape_size(out_);
    const size_t expect = shape_size(given_) * out_size_;
    if (probs_.size() != expect) throw ShapeError("kernel array does not match given/out shape");
    for (double p : probs_) {
        if (p < 0.0 || !std::isfinite(p)) throw ValidationError("negative or non-finite kernel entry");
    }
    if (max_row_sum_deviation() > kNormTol) throw ValidationError("kernel row deviates from stochasticity");
}

ConditionalKernel ConditionalKernel::renamed(const std::vector<std::string>& given_names,
                                             const std::vector<std::string>& out_names) const {
    if (given_names.size() != given_.size() || out_names.size() != out_.size())
        throw ArgumentError("rename list size mismatch");
    ConditionalKernel k = *this;
    for (size_t i = 0; i < given_names.size(); ++i) k.given_[i].name = given_names[i];
    for (size_t i = 0; i < out_names.size(); ++i) k.out_[i].name = out_names[i];
    return k;
}

double ConditionalKernel::max_row_sum_deviation() const {
    double worst = 0.0;
    for (size_t r = 0; r < rows(); ++r) {
        const double s = kernels::sum(probs_.data() + r * out_size_, out_size_);
        worst = std::max(worst, std::fabs(s - 1.0));
    }
    return worst;
}

JointDistribution compose(const std::vector<ConditionalKernel>& factors, const JointDistribution& roots) {
    std::vector<Var> vars = roots.vars();
    std::vector<double> cur(roots.probs().begin(), roots.probs().end());

    for (const auto& f : factors) {
        // Map each current axis onto its role in the factor's given-tuple.
        std::vector<size_t> row_stride(vars.size(), 0);
        size_t gstride = 1;
        for (auto it = f.given().rbegin(); it != f.given().rend(); ++it) {
            bool found = false;
            for (size_t ax = 0; ax < vars.size(); ++ax) {
                if (vars[ax].name != it->name) continue;
                if (vars[ax].alpha.size != it->alpha.size)
                    throw ShapeError("alphabet mismatch on variable " + it->name);
                row_stride[ax] = gstride;
                found = true;
                break;
            }
            if (!found)
                throw StructureError("factor conditions on variable not yet produced: " + it->name);
            gstride *= static_cast<size_t>(it->alpha.size);
        }
        for (const auto& ov : f.out()) {
            for (const auto& v : vars) {
                if (v.name == ov.name) throw StructureError("factor re-defines variable: " + ov.name);
            }
        }

        const size_t osz = f.out_size();
        std::vector<double> next(cur.size() * osz);
        std::vector<int> sizes(vars.size());
        for (size_t i = 0; i < vars.size(); ++i) sizes[i] = vars[i].alpha.size;
        Odometer od(std::move(sizes), std::move(row_stride));
        const double* kp = f.probs().data();
        for (size_t i = 0; i < cur.size(); ++i) {
            const double w = cur[i];
            const double* row = kp + od.projected * osz;
            double* dst = next.data() + i * osz;
            for (size_t o = 0; o < osz; ++o) dst[o] = w * row[o];
            od.advance();
        }
        cur = std::move(next);
        vars.insert(vars.end(), f.out().begin(), f.out().end());
    }

    const double mass = kernels::sum(cur.data(), cur.size());
    if (std::fabs(mass - 1.0) > kNormTol) throw ValidationError("composed distribution mass deviates from 1");
    return JointDistribution(std::move(vars), std::move(cur));
}

JointDistribution uniform_joint(std::vector<Var> vars) {
    const size_t n = [&] {
        size_t m = 1;
        for (const auto& v : vars) m *= static_cast<size_t>(v.alpha.size);
        return m;
    }();
    return JointDistribution(std::move(vars), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

JointDistribution vector_joint(const Var& v, std::span<const double> probs) {
    return JointDistribution({v}, std::vector<double>(probs.begin(), probs.end()));
}

JointDistribution product_joint(const JointDistribution& a, const JointDistribution& b) {
    std::vector<Var> vars = a.vars();
    vars.insert(vars.end(), b.vars().begin(), b.vars().end());
    std::vector<double> p;
    p.reserve(a.size() * b.size());
    for (double x : a.probs())
        for (double y : b.probs()) p.push_back(x * y);
    return JointDistribution(std::move(vars), std::move(p));
}

}  // namespace relaylab
