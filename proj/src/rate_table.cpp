#include "rate_table.hpp"

#include <cmath>
#include <sstream>

namespace calderon {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::Fail: return "FAIL";
        default: return "SKIPPED";
    }
}

std::optional<double> fit_loglog_slope(const std::vector<RateSample>& samples) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& s : samples) {
        if (s.failed || !(s.value > 0.0) || !std::isfinite(s.value)) continue;
        double x = std::log(s.parameter), y = std::log(s.value);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++n;
    }
    if (n < 2) return std::nullopt;
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) return std::nullopt;
    return (n * sxy - sx * sy) / denom;
}

Verdict non_increasing_verdict(const std::vector<RateSample>& samples, double rel_tol) {
    int valid = 0;
    for (const auto& s : samples)
        if (!s.failed) ++valid;
    if (valid < 2) return Verdict::Skipped;
    const RateSample* prev = nullptr;
    for (const auto& s : samples) {
        if (s.failed) continue;
        if (prev && s.normalized > prev->normalized * (1.0 + rel_tol) + 1e-300)
            return Verdict::Fail;
        prev = &s;
    }
    return Verdict::Pass;
}

Verdict bounded_ratio_verdict(const std::vector<RateSample>& samples, double max_over_min) {
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (const auto& s : samples) {
        if (s.failed) continue;
        if (!any) { lo = hi = s.normalized; any = true; }
        lo = std::min(lo, s.normalized);
        hi = std::max(hi, s.normalized);
    }
    if (!any) return Verdict::Skipped;
    if (hi == 0.0) return Verdict::Pass;  // identically zero sweep
    if (lo <= 0.0) return Verdict::Fail;
    return (hi / lo <= max_over_min) ? Verdict::Pass : Verdict::Fail;
}

void finalize_series(RateSeries& s, double rel_tol) {
    s.fitted_slope = fit_loglog_slope(s.samples);
    s.verdict = non_increasing_verdict(s.samples, rel_tol);
}

bool RateTable::all_pass() const {
    for (const auto& s : series)
        if (s.verdict == Verdict::Fail) return false;
    return true;
}

std::string RateTable::to_csv() const {
    std::ostringstream os;
    os.precision(12);
    os << parameter_name << ",norm_name,value,normalized_value\n";
    for (const auto& s : series)
        for (const auto& r : s.samples) {
            if (r.failed)
                os << r.parameter << "," << s.name << ",failed,failed\n";
            else
                os << r.parameter << "," << s.name << "," << r.value << "," << r.normalized << "\n";
        }
    return os.str();
}

std::string RateTable::to_json() const {
    std::ostringstream os;
    os.precision(12);
    os << "{\"parameter\":\"" << parameter_name << "\",\"series\":[";
    bool first = true;
    for (const auto& s : series) {
        if (!first) os << ",";
        first = false;
        os << "{\"name\":\"" << s.name << "\",\"target_exponent\":" << s.target_exponent
           << ",\"fitted_slope\":";
        if (s.fitted_slope)
            os << *s.fitted_slope;
        else
            os << "null";
        os << ",\"verdict\":\"" << to_string(s.verdict) << "\",\"samples\":[";
        for (std::size_t i = 0; i < s.samples.size(); ++i) {
            const auto& r = s.samples[i];
            if (i) os << ",";
            os << "{\"parameter\":" << r.parameter;
            if (r.failed)
                os << ",\"failed\":true}";
            else
                os << ",\"value\":" << r.value << ",\"normalized\":" << r.normalized << "}";
        }
        os << "]}";
    }
    os << "]}";
    return os.str();
}

}  // namespace calderon
