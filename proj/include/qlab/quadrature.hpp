#pragma once

#include <functional>
#include <vector>

namespace qlab {

/// Adaptive Simpson over [a, b] with Richardson correction; the local error
/// estimate |S2 - S1| / 15 must fall below the local share of tol before
/// max_depth halvings, else QuadratureFailure.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int max_depth = 48);

/// Adaptive Gauss-Kronrod (7/15 points) over [a, b], bisecting the piece with
/// the largest |K15 - G7| until the sum falls below tol.
double adaptive_gauss_kronrod(const std::function<double(double)>& f, double a, double b, double tol,
                              int max_pieces = 200000);

/// Integral over [a, b] split at the given breakpoints (those outside are
/// ignored) and at most `max_piece` wide, with tol shared by length.
double integrate_piecewise(const std::function<double(double)>& f, double a, double b, std::vector<double> breaks,
                           double max_piece, double tol, bool gauss_kronrod = false);

}  // namespace qlab
