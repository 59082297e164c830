#include "relau/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "relau/seqmodel.hpp"  // format_g9

namespace relau {

int label_index(int label) {
    if (label > 0) return 0;
    if (label < 0) return 1;
    return 2;
}

double f1_score(long tp, long fp, long fn) {
    if (tp < 0 || fp < 0 || fn < 0)
        throw ValidationError("f1_score: counts must be nonnegative");
    const double precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

double macro_f1(const Confusion3& confusion) {
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) {
        long tp = confusion[c][c];
        long fp = 0, fn = 0;
        for (int o = 0; o < 3; ++o) {
            if (o == c) continue;
            fp += confusion[o][c];
            fn += confusion[c][o];
        }
        sum += f1_score(tp, fp, fn);
    }
    return sum / 3.0;
}

double accuracy(const Confusion3& confusion) {
    long correct = 0, total = 0;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            total += confusion[r][c];
            if (r == c) correct += confusion[r][c];
        }
    return total > 0 ? static_cast<double>(correct) / total : 0.0;
}

double roc_auc(const std::vector<double>& scores,
               const std::vector<bool>& labels) {
    if (scores.size() != labels.size())
        throw ValidationError("roc_auc: size mismatch");
    long n_pos = 0, n_neg = 0;
    for (bool l : labels) (l ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw NumericError("roc_auc undefined: only one class present");

    // Mid-rank formulation handles ties at 1/2 per pair.
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]])
            ++j;
        const double mid_rank = 0.5 * (static_cast<double>(i + 1) +
                                       static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]]) rank_sum_pos += mid_rank;
        i = j + 1;
    }
    return (rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1)) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

/// Regularized incomplete beta I_x(a, b) by Lentz continued fraction.
double beta_cf(double a, double b, double x) {
    const double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-14) break;
    }
    return h;
}

double reg_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

} // namespace

double student_t_two_tailed_p(double t, int df) {
    if (df < 1) throw ValidationError("t-test: df must be >= 1");
    const double x = df / (df + t * t);
    double p = reg_incomplete_beta(0.5 * df, 0.5, x);
    return std::clamp(p, 0.0, 1.0);
}

double paired_t_test(const std::vector<double>& x,
                     const std::vector<double>& y) {
    if (x.size() != y.size())
        throw ValidationError("paired_t_test: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw ValidationError("paired_t_test: need at least 2 pairs");

    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - y[i];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) {
        // Identical differences: no effect gives p = 1; a nonzero constant
        // effect with zero variance caps at machine tiny.
        return mean == 0.0 ? 1.0 : 1e-300;
    }
    const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
    return student_t_two_tailed_p(t, static_cast<int>(n) - 1);
}

void EvalReport::finalize() {
    const std::size_t n = rows.size();
    if (n == 0) return;
    double sb = 0.0, sr = 0.0;
    for (const auto& r : rows) {
        sb += r.f1_baseline;
        sr += r.f1_relative;
    }
    mean_f1_baseline = sb / n;
    mean_f1_relative = sr / n;
    double vb = 0.0, vr = 0.0;
    for (const auto& r : rows) {
        vb += (r.f1_baseline - mean_f1_baseline) * (r.f1_baseline - mean_f1_baseline);
        vr += (r.f1_relative - mean_f1_relative) * (r.f1_relative - mean_f1_relative);
    }
    var_f1_baseline = n > 1 ? vb / (n - 1) : 0.0;
    var_f1_relative = n > 1 ? vr / (n - 1) : 0.0;
    if (n >= 2) {
        std::vector<double> xs, ys;
        for (const auto& r : rows) {
            xs.push_back(r.f1_relative);
            ys.push_back(r.f1_baseline);
        }
        t_test_p = paired_t_test(xs, ys);
    }
}

namespace {
std::string fmt(double v) { return format_g9(v); }
}

void write_report_csv(const EvalReport& report, const std::string& path) {
    std::ostringstream out;
    out << "au_id,f1_baseline,f1_relative,auc_baseline,auc_relative,"
           "accuracy_baseline,accuracy_relative\n";
    for (const auto& r : report.rows) {
        out << r.au_id << "," << fmt(r.f1_baseline) << "," << fmt(r.f1_relative)
            << ",";
        if (r.auc_defined)
            out << fmt(r.auc_baseline) << "," << fmt(r.auc_relative);
        else
            out << ",";
        out << "," << fmt(r.accuracy_baseline) << "," << fmt(r.accuracy_relative)
            << "\n";
    }
    out << "average," << fmt(report.mean_f1_baseline) << ","
        << fmt(report.mean_f1_relative) << ",,,,\n";
    out << "variance," << fmt(report.var_f1_baseline) << ","
        << fmt(report.var_f1_relative) << ",,,,\n";
    out << "t_test_p," << fmt(report.t_test_p) << ",,,,,\n";

    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot write report: " + path);
    file << out.str();
}

void write_report_json(const EvalReport& report, const std::string& path) {
    nlohmann::json j;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : report.rows) {
        nlohmann::json row;
        row["au_id"] = r.au_id;
        row["f1_baseline"] = r.f1_baseline;
        row["f1_relative"] = r.f1_relative;
        if (r.auc_defined) {
            row["auc_baseline"] = r.auc_baseline;
            row["auc_relative"] = r.auc_relative;
        }
        row["accuracy_baseline"] = r.accuracy_baseline;
        row["accuracy_relative"] = r.accuracy_relative;
        j["rows"].push_back(row);
    }
    j["mean_f1_baseline"] = report.mean_f1_baseline;
    j["mean_f1_relative"] = report.mean_f1_relative;
    j["var_f1_baseline"] = report.var_f1_baseline;
    j["var_f1_relative"] = report.var_f1_relative;
    j["t_test_p"] = report.t_test_p;
    j["warnings"] = report.warnings;
    if (!report.config_snapshot.empty())
        j["config"] = nlohmann::json::parse(report.config_snapshot);

    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot write report: " + path);
    file << j.dump(2) << "\n";
}

std::string format_report_table(const EvalReport& report) {
    std::ostringstream out;
    out << "AU     F1(base)  F1(rel)   AUC(base) AUC(rel)  Acc(base) Acc(rel)\n";
    char line[160];
    for (const auto& r : report.rows) {
        if (r.auc_defined)
            std::snprintf(line, sizeof(line),
                          "AU%-4d %-9.3f %-9.3f %-9.3f %-9.3f %-9.3f %-9.3f\n",
                          r.au_id, r.f1_baseline, r.f1_relative, r.auc_baseline,
                          r.auc_relative, r.accuracy_baseline, r.accuracy_relative);
        else
            std::snprintf(line, sizeof(line),
                          "AU%-4d %-9.3f %-9.3f %-9s %-9s %-9.3f %-9.3f\n",
                          r.au_id, r.f1_baseline, r.f1_relative, "-", "-",
                          r.accuracy_baseline, r.accuracy_relative);
        out << line;
    }
    std::snprintf(line, sizeof(line), "avg    %-9.3f %-9.3f\n",
                  report.mean_f1_baseline, report.mean_f1_relative);
    out << line;
    std::snprintf(line, sizeof(line), "var    %-9.5f %-9.5f\n",
                  report.var_f1_baseline, report.var_f1_relative);
    out << line;
    std::snprintf(line, sizeof(line), "paired t-test p = %g\n", report.t_test_p);
    out << line;
    return out.str();
}

} // namespace relau
