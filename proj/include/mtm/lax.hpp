#pragma once

#include "mtm/fields.hpp"
#include "mtm/solitons.hpp"

namespace mtm {

/// 2x2 complex matrix.
struct Mat2 {
    cplx a11, a12, a21, a22;

    Mat2 operator*(const Mat2& o) const;
    Mat2 operator-(const Mat2& o) const;
    Mat2 operator+(const Mat2& o) const;
    cplx trace() const { return a11 + a22; }
};

/// Spatial Lax matrix L(u, v, lambda) at one point.
Mat2 lax_L(cplx u, cplx v, cplx lambda);
/// Temporal Lax matrix A(u, v, lambda) at one point.
Mat2 lax_A(cplx u, cplx v, cplx lambda);

/// Pointwise samples of a 2x2 operator on the grid.
struct LaxOperatorSample {
    Grid grid;
    CArray a11, a12, a21, a22;

    explicit LaxOperatorSample(const Grid& g);
    Mat2 at(int j) const { return {a11[j], a12[j], a21[j], a22[j]}; }
};

LaxOperatorSample assemble_L(const SpinorField& f, cplx lambda);
LaxOperatorSample assemble_A(const SpinorField& f, cplx lambda);

/// Unit-modulus phases removing the (|u|^2 - |v|^2) diagonal of L.
/// m1 = exp(i/4 int_{x_min}^x (|u|^2-|v|^2)), m2 = exp(i/4 int_x^{x_max} (|u|^2-|v|^2)).
struct GaugePhase {
    Grid grid;
    CArray m1;
    CArray m2;
};

GaugePhase gauge_transform(const SpinorField& f);

/// Asymptotic conventions attached to a JostPair.
struct JostNormalization {
    /// false: unit reduced vector at the recessive end (solve_jost);
    /// true: boundary values carrying the time phases exp(+-i t k2) (solve_time_bvp).
    bool time_phases = false;
    double t = 0.0;
    cplx k1;
    /// Prescribed values of left(x_min) and right(x_max) in original variables.
    cplx left_at_min[2];
    cplx right_at_max[2];
};

/// Left (recessive at x_min) and right (recessive at x_max) solutions of phi_x = L phi.
/// The reduced fields are the gauge- and exponent-free parts:
///   phi-type: phi = e^{k1 x} diag(m1, conj m1) reduced,
///   chi-type: phi = e^{-k1 x} diag(conj m2, m2) reduced.
/// When Re k1 < 0 the right solution is phi-type and the left one chi-type.
struct JostPair {
    cplx lambda;
    LaxVector left;
    LaxVector right;
    LaxVector left_reduced;
    LaxVector right_reduced;
    GaugePhase gauge;
    JostNormalization normalization;
};

JostPair solve_jost(const SpinorField& f, cplx lambda);

/// Jost solutions at time t with the boundary values
/// reduced right(x_min) = (e^{i t k2}, *), reduced left(x_max) = (*, e^{-i t k2}).
/// Requires Re k1 < 0 (gamma in (0, pi)).
JostPair solve_time_bvp(const SpinorField& f_t, cplx lambda, double t);

/// det[left(0)/|left(0)|, right(0)/|right(0)|] at the sample nearest x = 0.
cplx evans_function(const SpinorField& f, cplx lambda);

struct EigenResult {
    cplx lambda;
    LaxVector eigenvector;
    double evans_residual = 0.0;
    int iterations = 0;
};

struct SecantOptions {
    double tolerance = 1e-10;
    int max_iterations = 50;
    double second_point = 1e-3;  // relative offset of the second starting point
};

EigenResult find_eigenvalue(const SpinorField& f, cplx lambda_guess, const SecantOptions& opt = {});

/// Stitched decaying eigenvector from a JostPair whose solutions are collinear.
LaxVector eigenvector_from_jost(const JostPair& jp);

/// Kernel vectors of the soliton linearization at gamma:
/// phi (decaying solution), eta (adjoint kernel), xi (growing solution, det[phi, xi] = -4).
struct NullVectors {
    LaxVector phi;
    LaxVector eta;
    LaxVector xi;
};

NullVectors null_vectors(double gamma, const Grid& grid);

/// P v = v - <s3 eta, v>/<s3 eta, phi> phi.
LaxVector project_P(double gamma, const LaxVector& v);
/// sigma_3 P sigma_3.
LaxVector project_P_hat(double gamma, const LaxVector& f);

struct ResolventOptions {
    double solvability_tolerance = 1e-6;  // relative: |<eta,f>| / (||eta|| ||f||)
};

/// Solves (d/dx - M_gamma) w = f with <s3 eta, w> = 0.
LaxVector resolvent_solve(double gamma, const LaxVector& f, const ResolventOptions& opt = {});

/// L2 norm of (d/dx - L(u, v, lambda)) psi, using centered differences of the given order
/// (one-sided at the two ends; psi is not assumed periodic).
double lax_residual(const SpinorField& f, const LaxVector& psi, cplx lambda, int order = 2);

/// Same with the soliton operator M_gamma.
double soliton_lax_residual(double gamma, const LaxVector& w, const LaxVector& rhs, int order = 2);

struct SConstant {
    cplx closed_form;  // 4 i e^{-i gamma/2} / sin gamma
    cplx quadrature;   // scalar integral form
    cplx matrix_form;  // (i/2) <eta, B phi> with the lambda-derivative of L
    double relative_error = 0.0;  // |quadrature - closed_form| / |closed_form|
};

SConstant s_constant(double gamma);

/// Remainder functions of the eigenvector relative to its explicit envelope.
struct RemainderDiagnostics {
    double gamma = 0.0;
    Grid grid;
    CArray r11, r12, r21, r22;
    double sup[4] = {0, 0, 0, 0};
    double l2[4] = {0, 0, 0, 0};
    double window = 0.0;  // reporting restricted to |x| <= window
    /// Eigenvector after removing the gauge phase and rescaling so that
    /// <s3 eta, reduced> = <s3 eta, phi_gamma>; this is what the remainders describe.
    LaxVector reduced;
    cplx scale;
};

RemainderDiagnostics eigenvector_remainder(const SpinorField& f, const EigenResult& res);

/// Rebuilds the (rescaled, un-gauged) eigenvector from the remainder functions.
LaxVector reconstruct_from_remainder(const RemainderDiagnostics& r);

/// Pointwise step of phi_t = A phi by the exponential midpoint rule.
LaxVector advance_lax_vector(const LaxVector& phi, const SpinorField& before, const SpinorField& after,
                             cplx lambda, double dt);

/// L2 norm over all four entries of dA/dx - dL/dt + [A, L] for a closed-form solution.
double zero_curvature_residual(const SpaceTimeField& f, cplx lambda, double t, const Grid& grid, double dt);

/// Matrix exponential of a traceless 2x2 matrix.
Mat2 expm_traceless(const Mat2& m);

}  // namespace mtm
