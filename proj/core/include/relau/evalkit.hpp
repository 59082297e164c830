#pragma once

#include <array>
#include <string>
#include <vector>

#include "relau/errors.hpp"

namespace relau {

/// 3x3 confusion over {increase, decrease, no-change}; rows = truth,
/// cols = prediction, class order up(+1), down(-1), same(0).
using Confusion3 = std::array<std::array<long, 3>, 3>;

/// Class index for a relative label in {+1, -1, 0}.
int label_index(int label);

/// Harmonic mean of precision and recall; any 0/0 resolves to 0.
double f1_score(long tp, long fp, long fn);

/// Unweighted mean of per-class one-vs-rest F1 over the three classes.
double macro_f1(const Confusion3& confusion);

double accuracy(const Confusion3& confusion);

/// Mann-Whitney AUC: fraction of positive-negative score pairs correctly
/// ordered, ties counted 1/2. Throws NumericError when only one class is
/// present.
double roc_auc(const std::vector<double>& scores,
               const std::vector<bool>& labels);

/// Two-tailed paired Student's t-test p-value. x = y gives p = 1; zero
/// variance with nonzero mean gives the documented tiny cap.
double paired_t_test(const std::vector<double>& x,
                     const std::vector<double>& y);

/// Student's t CDF complement helper, exposed for the metric tests.
double student_t_two_tailed_p(double t, int df);

struct EvalAuRow {
    int au_id = 0;
    double f1_baseline = 0.0;
    double f1_relative = 0.0;
    double auc_baseline = 0.0;
    double auc_relative = 0.0;
    bool auc_defined = false;
    double accuracy_baseline = 0.0;
    double accuracy_relative = 0.0;
};

/// Per-AU comparison of the relative pipeline against the frame-based
/// baseline, plus cross-AU aggregates.
struct EvalReport {
    std::vector<EvalAuRow> rows;
    double mean_f1_baseline = 0.0;
    double mean_f1_relative = 0.0;
    double var_f1_baseline = 0.0;
    double var_f1_relative = 0.0;
    double t_test_p = 1.0;
    std::string config_snapshot;  // canonical JSON of the run config
    std::vector<std::string> warnings;

    void finalize();  // fills aggregates from rows
};

void write_report_csv(const EvalReport& report, const std::string& path);
void write_report_json(const EvalReport& report, const std::string& path);
std::string format_report_table(const EvalReport& report);

} // namespace relau
