#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace amsc {

// Error categories surfaced by the library. The CLI maps these onto its
// documented exit codes.
enum class ErrorCode {
    Parse,              // malformed input file
    Reference,          // id reference does not resolve
    Domain,             // argument outside the documented domain
    MissingCoefficient, // required model coefficient absent
    SizeCap,            // input exceeds a hard size cap
    Degenerate,         // structurally degenerate input (e.g. all-zero matrix)
    Io,                 // filesystem failure
    Provider            // matrix/tariff provider failure
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

// Objective comparisons run at this absolute tolerance; currency is kept in
// binary floating point and only rounded to cents for reporting.
inline constexpr double kObjectiveTol = 1e-6;

// Relative tolerance for "exact" optimality claims (solver vs oracle).
inline constexpr double kRelTol = 1e-9;

inline bool nearly_equal(double a, double b, double abs_tol = kObjectiveTol) {
    return std::fabs(a - b) <= abs_tol;
}

inline bool rel_equal(double a, double b, double rel_tol = kRelTol) {
    double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
    return std::fabs(a - b) <= rel_tol * scale;
}

// Two-digit cent rendering for reports ("48402.89"). Payload files keep the
// full double so round-trips are lossless.
inline std::string format_money(double amount) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", amount + 0.0); // normalize -0
    return std::string(buf);
}

} // namespace amsc
