#pragma once

#include <string>
#include <utility>
#include <vector>

#include "relaylab/markov.hpp"

namespace relaylab {

// Strict inequalities hold only with this much slack; boundary points are
// reported infeasible.
inline constexpr double kStrictSlack = 1e-12;

// Information parts of the six per-block quantities entering the new-scheme
// conditions, in nats, evaluated on the eleven-variable joint. The rate
// unknown inside c1/c2 is solved for by the evaluator, so c2 = 0 and
// c1 = c3 = I(Yh;Y1|X1,X) here; the d's are the three conditional mutual
// informations the conditions bound against.
struct RateTerms {
    double c1 = 0, c2 = 0, c3 = 0;
    double d1 = 0, d2 = 0, d3 = 0;
};

RateTerms compute_rate_terms(const JointDistribution& eleven);

// Evaluation of the new scheme's three achievability conditions.
//   rate_bound_a     : ceiling on R from the first condition (= d2)
//   feasibility_gap_b: slack of the strict second condition (= d3 - c3)
//   rate_bound_c     : ceiling on R from the third condition (= d1 - c3)
// achievable_rate = max(0, min(a, c)) when the gap is strictly positive,
// else 0 with feasible = false.
struct RateReport {
    double rate_bound_a = 0;
    double feasibility_gap_b = 0;
    double rate_bound_c = 0;
    double achievable_rate = 0;
    bool feasible = false;
};

RateReport evaluate_new_scheme(const BlockProcess& bp);
RateReport evaluate_new_scheme(const RelayChannel& ch, const NewSchemeParams& p);

// Compress-and-forward parameterization: independent input laws plus the
// relay compressor.
struct CafParams {
    Alphabet yhat;
    std::vector<double> input_law;  // p(x)
    std::vector<double> relay_law;  // p(x1)
    ConditionalKernel compressor;   // given (y1,x1), out yh
};

CafParams make_caf_params(const RelayChannel& ch, int yhat_size, std::vector<double> input_law,
                          std::vector<double> relay_law, std::vector<double> compressor);

void check_caf_params_match(const RelayChannel& ch, const CafParams& p);

// Single-block CAF joint p(x)p(x1)p(y,y1|x,x1)p(yh|y1,x1) over (x,x1,y,y1,yh).
JointDistribution caf_joint(const RelayChannel& ch, const CafParams& p);

enum class CafForm { theorem2, form1, form2, form3, compact };

const char* caf_form_name(CafForm f);
CafForm parse_caf_form(const std::string& name);  // ArgumentError on unknown id

// All mutual-information terms the five CAF forms need, each computed along
// its own decomposition so cross-form agreement is a genuine identity check.
struct CafTerms {
    double t2_bound = 0;        // I(X;Y,Yh|X1)
    double t2_strict = 0;       // I(X1;Y) - I(Y1;Yh|X1,Y)
    double chain_bound1 = 0;    // I(X;Yh|X1) + I(X;Y|Yh,X1)
    double chain_bound2 = 0;    // I(X;Yh|X1) - I(Y1;Yh|X1) + I(X,Yh;Y|X1) + I(X1;Y)
    double form1_strict = 0;    // I(Yh;Y|X1) + I(X1;Y) - I(Y1;Yh|X1)
    double form3_strict = 0;    // I(Yh;Y|X1,X) + I(X1;Y|X) - I(Yh;Y1|X1,X)
    double compact_bound1 = 0;  // I(X;Y,Yh|X1)
    double compact_strict = 0;  // I(Yh,X1;Y|X) - I(Yh;Y1|X1,X)
    double compact_bound2 = 0;  // I(X,Yh,X1;Y) - I(Y1;Yh|X1,X)
};

CafTerms compute_caf_terms(const JointDistribution& joint);

struct CafReport {
    CafForm form = CafForm::theorem2;
    double achievable_rate = 0;
    std::vector<std::pair<std::string, double>> condition_gaps;  // (condition id, slack)
    bool feasible = false;
};

CafReport report_for_form(const CafTerms& t, CafForm form);
CafReport evaluate_caf(const RelayChannel& ch, const CafParams& p, CafForm form);

// Block-independent lift of CAF parameters into the new scheme: the input
// chain ignores x~ and the relay map ignores yh.
NewSchemeParams lift_caf_params(const RelayChannel& ch, const CafParams& p);

// Evaluates the lifted new-scheme conditions against the compact CAF form;
// the three condition values must coincide.
struct DegenerationResult {
    RateReport new_report;
    CafReport caf_report;
    double max_abs_gap = 0;
};

DegenerationResult check_degeneration(const RelayChannel& ch, const CafParams& p);

// Exact multi-block verification that each error-condition mutual
// information dominates its three-block lower bound.
struct AppendixBRow {
    int j = 0, k = 0;
    double lhs_exact = 0;
    double rhs_lower_bound = 0;
    double residual = 0;  // lhs - rhs, expected >= -1e-9
};

std::vector<AppendixBRow> verify_appendix_b_bounds(const RelayChannel& ch, const NewSchemeParams& p, int B);

// Auxiliary-compressor repair: degrades the compressor along the
// lambda-erasure family (keep w.p. lambda, reset to symbol 0 otherwise)
// until the two-condition form at rate R becomes strictly feasible.
struct RepairResult {
    CafParams params;
    double lambda = 1.0;           // 1 = unchanged, 0 = constant compressor
    std::string branch;            // "unchanged" | "independent" | "bisection"
};

RepairResult repair_auxiliary(const RelayChannel& ch, const CafParams& p, double rate);

}  // namespace relaylab
