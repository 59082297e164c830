#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "relau/evalkit.hpp"

using namespace relau;

namespace {

/// Numerical-integration oracle for the two-tailed Student t p-value:
/// Simpson's rule on the density over [0, |t|], p = 1 - 2 * integral.
double t_p_oracle(double t, int df) {
    const double a = std::abs(t);
    const double log_norm = std::lgamma(0.5 * (df + 1)) -
                            std::lgamma(0.5 * df) -
                            0.5 * std::log(df * std::acos(-1.0));
    auto density = [&](double u) {
        return std::exp(log_norm -
                        0.5 * (df + 1) * std::log1p(u * u / df));
    };
    const int steps = 20000;  // even
    const double h = a / steps;
    double sum = density(0.0) + density(a);
    for (int i = 1; i < steps; ++i)
        sum += density(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    const double integral = sum * h / 3.0;
    return 1.0 - 2.0 * integral;
}

/// Literal pair-counting AUC with ties at one half.
double auc_oracle(const std::vector<double>& scores,
                  const std::vector<bool>& labels) {
    double wins = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

} // namespace

TEST_CASE("label_index maps the three relative classes") {
    CHECK(label_index(1) == 0);
    CHECK(label_index(-1) == 1);
    CHECK(label_index(0) == 2);
}

TEST_CASE("f1 hand values and 0/0 convention") {
    CHECK(f1_score(0, 0, 0) == 0.0);
    CHECK(f1_score(0, 5, 7) == 0.0);
    CHECK(f1_score(10, 0, 0) == doctest::Approx(1.0));
    // precision 0.5, recall 0.25 gives F1 = 1/3.
    CHECK(f1_score(2, 2, 6) == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(f1_score(-1, 0, 0), ValidationError);
}

TEST_CASE("macro F1 averages the three one-vs-rest scores") {
    // Perfect diagonal.
    Confusion3 perfect = {{{5, 0, 0}, {0, 3, 0}, {0, 0, 7}}};
    CHECK(macro_f1(perfect) == doctest::Approx(1.0));
    CHECK(accuracy(perfect) == doctest::Approx(1.0));

    // Hand-checked mixed case.
    Confusion3 mixed = {{{4, 1, 1}, {0, 2, 2}, {2, 1, 7}}};
    const double f_up = f1_score(4, 2, 2);
    const double f_down = f1_score(2, 2, 2);
    const double f_same = f1_score(7, 3, 3);
    CHECK(macro_f1(mixed) == doctest::Approx((f_up + f_down + f_same) / 3.0));
    CHECK(accuracy(mixed) == doctest::Approx(13.0 / 20.0));

    Confusion3 empty = {{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}};
    CHECK(accuracy(empty) == 0.0);
    CHECK(macro_f1(empty) == 0.0);
}

TEST_CASE("roc_auc matches brute-force pair counting") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> score(-1.0, 1.0);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> tied(0, 4);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> scores;
        std::vector<bool> labels;
        bool has_pos = false, has_neg = false;
        for (int i = 0; i < 30; ++i) {
            // Coarse quantization forces plenty of ties.
            scores.push_back(tied(rng) * 0.25);
            const bool l = coin(rng) == 1;
            labels.push_back(l);
            (l ? has_pos : has_neg) = true;
        }
        if (!has_pos || !has_neg) continue;
        CHECK(roc_auc(scores, labels) ==
              doctest::Approx(auc_oracle(scores, labels)).epsilon(1e-12));
    }
}

TEST_CASE("roc_auc extremes and error cases") {
    CHECK(roc_auc({1, 2, 3, 4}, {false, false, true, true}) == doctest::Approx(1.0));
    CHECK(roc_auc({4, 3, 2, 1}, {false, false, true, true}) == doctest::Approx(0.0));
    CHECK(roc_auc({1, 1, 1, 1}, {false, true, false, true}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(roc_auc({1, 2}, {true, true}), NumericError);
    CHECK_THROWS_AS(roc_auc({1, 2}, {true}), ValidationError);
}

TEST_CASE("two-tailed t p-values match numerical integration") {
    for (int df : {1, 2, 5, 7, 30}) {
        for (double t : {0.0, 0.5, 1.0, 2.2, 4.0}) {
            CHECK(student_t_two_tailed_p(t, df) ==
                  doctest::Approx(t_p_oracle(t, df)).epsilon(1e-8));
            // Symmetry in t.
            CHECK(student_t_two_tailed_p(-t, df) ==
                  doctest::Approx(student_t_two_tailed_p(t, df)));
        }
    }
    CHECK_THROWS_AS(student_t_two_tailed_p(1.0, 0), ValidationError);
}

TEST_CASE("paired t-test edge cases and a textbook value") {
    CHECK(paired_t_test({1, 2, 3}, {1, 2, 3}) == 1.0);
    CHECK(paired_t_test({2, 3, 4}, {1, 2, 3}) == doctest::Approx(1e-300));
    CHECK_THROWS_AS(paired_t_test({1.0}, {2.0}), ValidationError);
    CHECK_THROWS_AS(paired_t_test({1, 2}, {1, 2, 3}), ValidationError);

    // d = {1, -1, 2, 0, 3}: mean 1, sd sqrt(2.5), t = sqrt(2), df = 4.
    const double p = paired_t_test({2, 1, 4, 3, 7}, {1, 2, 2, 3, 4});
    CHECK(p == doctest::Approx(t_p_oracle(std::sqrt(2.0), 4)).epsilon(1e-8));
}

TEST_CASE("report aggregates and writers") {
    EvalReport report;
    for (int i = 0; i < 4; ++i) {
        EvalAuRow row;
        row.au_id = i + 1;
        row.f1_baseline = 0.4 + 0.05 * i;
        row.f1_relative = 0.6 + 0.05 * i;
        row.auc_defined = (i != 2);
        row.auc_baseline = 0.7;
        row.auc_relative = 0.8;
        row.accuracy_baseline = 0.5;
        row.accuracy_relative = 0.7;
        report.rows.push_back(row);
    }
    report.config_snapshot = "{\"window\": 10}";
    report.finalize();

    CHECK(report.mean_f1_baseline == doctest::Approx(0.475));
    CHECK(report.mean_f1_relative == doctest::Approx(0.675));
    // Constant improvement of 0.2 with zero variance hits the tiny cap.
    CHECK(report.t_test_p == doctest::Approx(1e-300));

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "relau_evalkit_test";
    fs::create_directories(dir);
    const std::string csv = (dir / "report.csv").string();
    const std::string json = (dir / "report.json").string();
    write_report_csv(report, csv);
    write_report_json(report, json);

    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "au_id,f1_baseline,f1_relative,auc_baseline,auc_relative,"
          "accuracy_baseline,accuracy_relative");
    int lines = 1;
    std::string line;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 8);  // header + 4 rows + average + variance + p

    std::ifstream jin(json);
    std::stringstream buf;
    buf << jin.rdbuf();
    CHECK(buf.str().find("\"t_test_p\"") != std::string::npos);
    CHECK(buf.str().find("\"window\"") != std::string::npos);

    const std::string table = format_report_table(report);
    CHECK(table.find("AU1") != std::string::npos);
    CHECK(table.find("paired t-test p") != std::string::npos);

    fs::remove_all(dir);
    CHECK_THROWS_AS(write_report_csv(report, "/nonexistent/dir/report.csv"),
                    IoError);
}
