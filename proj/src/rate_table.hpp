// Measured norm vs. scale-parameter samples with fitted log-log slopes and
// verdicts against target exponents.
#pragma once

#include <optional>
#include <string>
#include <vector>

namespace calderon {

enum class Verdict { Pass, Fail, Skipped };

std::string to_string(Verdict v);

struct RateSample {
    double parameter;      // t or s
    double value;          // measured norm
    double normalized;     // value * parameter^exponent
    bool failed = false;   // sample could not be produced (solver error etc.)
};

struct RateSeries {
    std::string name;
    double target_exponent;
    std::vector<RateSample> samples;
    std::optional<double> fitted_slope;  // least-squares slope of log value vs log parameter
    Verdict verdict = Verdict::Skipped;
};

struct RateTable {
    std::string parameter_name;  // "t" or "s"
    std::vector<RateSeries> series;
    bool all_pass() const;
    std::string to_csv() const;   // columns: parameter, norm_name, value, normalized_value
    std::string to_json() const;  // adds fitted slope and verdict
};

// slope of log(value) against log(parameter), ignoring non-finite/zero samples
std::optional<double> fit_loglog_slope(const std::vector<RateSample>& samples);

// PASS when each consecutive normalized value does not grow by more than rel_tol;
// all-zero series pass vacuously
Verdict non_increasing_verdict(const std::vector<RateSample>& samples, double rel_tol);

// PASS when max/min of the normalized values stays below the given ratio
Verdict bounded_ratio_verdict(const std::vector<RateSample>& samples, double max_over_min);

void finalize_series(RateSeries& s, double rel_tol = 0.05);

}  // namespace calderon
