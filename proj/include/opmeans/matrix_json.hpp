#pragma once

// Matrix JSON: {"dim": n, "re": [[...]], "im": [[...]]}, row-major, "im" optional.

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "opmeans/errors.hpp"
#include "opmeans/psd.hpp"

namespace opmeans {

using json = nlohmann::json;

[[nodiscard]] inline json matrix_to_json(const HermitianMatrix& h) {
    const auto n = static_cast<Eigen::Index>(h.dim());
    json re = json::array();
    json im = json::array();
    bool any_imag = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        json rr = json::array();
        json ri = json::array();
        for (Eigen::Index j = 0; j < n; ++j) {
            const Complex z = h.matrix()(i, j);
            rr.push_back(z.real());
            ri.push_back(z.imag());
            any_imag = any_imag || z.imag() != 0.0;
        }
        re.push_back(std::move(rr));
        im.push_back(std::move(ri));
    }
    json out = {{"dim", h.dim()}, {"re", std::move(re)}};
    if (any_imag) out["im"] = std::move(im);
    return out;
}

namespace detail {

inline double json_number(const json& v, const char* what) {
    if (!v.is_number()) throw ParseError(std::string(what) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ParseError(std::string(what) + ": non-finite entry");
    return x;
}

inline void check_grid(const json& grid, std::size_t n, const char* what) {
    if (!grid.is_array() || grid.size() != n)
        throw ParseError(std::string(what) + ": expected " + std::to_string(n) + " rows");
    for (const auto& row : grid)
        if (!row.is_array() || row.size() != n)
            throw ParseError(std::string(what) + ": expected " + std::to_string(n) + " columns per row");
}

}  // namespace detail

/// Parses a matrix document. The input must be Hermitian up to rounding
/// (relative 1e-12); it is symmetrized on the way in.
[[nodiscard]] inline HermitianMatrix matrix_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("matrix: expected an object");
    if (!j.contains("dim") || !j["dim"].is_number_integer() || j["dim"].get<long long>() < 1)
        throw ParseError("matrix: \"dim\" must be a positive integer");
    const auto n = static_cast<std::size_t>(j["dim"].get<long long>());
    if (!j.contains("re")) throw ParseError("matrix: missing \"re\"");
    detail::check_grid(j["re"], n, "matrix.re");
    const bool has_im = j.contains("im") && !j["im"].is_null();
    if (has_im) detail::check_grid(j["im"], n, "matrix.im");

    const auto en = static_cast<Eigen::Index>(n);
    DenseMatrix m(en, en);
    double scale = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            const double re = detail::json_number(j["re"][r][c], "matrix.re");
            const double im = has_im ? detail::json_number(j["im"][r][c], "matrix.im") : 0.0;
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = Complex(re, im);
            scale = std::max(scale, std::abs(Complex(re, im)));
        }
    }
    const double skew = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (skew > 1e-12 * (1.0 + scale)) throw ParseError("matrix: input is not Hermitian");
    return symmetrize(m);
}

}  // namespace opmeans
