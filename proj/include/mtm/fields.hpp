#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "mtm/errors.hpp"

namespace mtm {

using cplx = std::complex<double>;
using CArray = std::vector<cplx>;

inline constexpr cplx I{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

/// Uniform grid x_j = x_min + j*dx, j = 0..n-1, dx = (x_max - x_min)/n.
/// On a periodic grid x_max is identified with x_min.
class Grid {
public:
    Grid() = default;
    Grid(double x_min, double x_max, int n, bool periodic = true);

    /// Symmetric grid on [-half_width, half_width].
    static Grid symmetric(double half_width, int n, bool periodic = true);

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    int n() const { return n_; }
    double dx() const { return dx_; }
    bool periodic() const { return periodic_; }

    double x(int j) const { return x_min_ + j * dx_; }
    std::vector<double> points() const;

    /// Index of the sample closest to x.
    int nearest(double x) const;

    bool operator==(const Grid& other) const;
    bool operator!=(const Grid& other) const { return !(*this == other); }

private:
    double x_min_ = -1.0;
    double x_max_ = 1.0;
    int n_ = 8;
    double dx_ = 0.25;
    bool periodic_ = true;
};

void require_same_grid(const Grid& a, const Grid& b, const char* where);

/// The MTM state (u, v) on a grid.
struct SpinorField {
    Grid grid;
    CArray u;
    CArray v;

    SpinorField() = default;
    explicit SpinorField(const Grid& g);
    SpinorField(const Grid& g, CArray u_, CArray v_);

    int size() const { return grid.n(); }
    bool finite() const;
};

/// Two-component solution of the linear Lax system.
struct LaxVector {
    Grid grid;
    CArray phi1;
    CArray phi2;

    LaxVector() = default;
    explicit LaxVector(const Grid& g);
    LaxVector(const Grid& g, CArray p1, CArray p2);

    int size() const { return grid.n(); }
};

SpinorField operator+(const SpinorField& a, const SpinorField& b);
SpinorField operator-(const SpinorField& a, const SpinorField& b);
SpinorField operator*(cplx s, const SpinorField& a);
LaxVector operator+(const LaxVector& a, const LaxVector& b);
LaxVector operator-(const LaxVector& a, const LaxVector& b);
LaxVector operator*(cplx s, const LaxVector& a);

/// sigma_3 applied pointwise: (phi1, -phi2).
LaxVector sigma3(const LaxVector& f);

/// Quadrature weight of sample j: dx on periodic grids, trapezoid otherwise.
double quad_weight(const Grid& g, int j);

/// Integral of sampled values over the grid.
double integrate(const Grid& g, const std::vector<double>& f);
cplx integrate(const Grid& g, const CArray& f);

/// Running trapezoid integral from x_min: out[0] = 0.
std::vector<double> cumulative_trapezoid(const Grid& g, const std::vector<double>& f);

/// Running integral from x_min with the end-corrected trapezoid
/// h/24 (-f[j-1] + 13 f[j] + 13 f[j+1] - f[j+2]) on interior panels (fourth order)
/// and the matching one-sided four-point rule on the two end panels.
std::vector<double> cumulative_integral4(const Grid& g, const std::vector<double>& f);
CArray cumulative_integral4(const Grid& g, const CArray& f);

/// L2 norm of a single component.
double l2_norm(const Grid& g, const CArray& f);

/// Charge integral of |u|^2 + |v|^2.
double l2_norm_sq(const SpinorField& f);
double l2_norm_sq(const LaxVector& f);

/// Sum of component norms ||u|| + ||v||, the metric used for orbit distances.
double split_norm(const SpinorField& f);

/// <f, g> = integral of conj(f1) g1 + conj(f2) g2.
cplx inner_product(const LaxVector& f, const LaxVector& g);
cplx inner_product(const SpinorField& f, const SpinorField& g);

/// ||d/dx f|| using centered differences (one-sided at the ends of open grids).
double h1_seminorm(const Grid& g, const CArray& f);
double h1_seminorm(const LaxVector& f);
double h1_seminorm(const SpinorField& f);

/// Centered first derivative; fourth-order interior stencil when order == 4.
CArray derivative(const Grid& g, const CArray& f, int order = 2);

double sup_norm(const CArray& f);

/// Field snapshot CSV: header x,re_u,im_u,re_v,im_v; 17 significant digits.
void write_field_csv(std::ostream& os, const SpinorField& f);
void write_field_csv(const std::string& path, const SpinorField& f);
SpinorField read_field_csv(std::istream& is, bool periodic = true);
SpinorField read_field_csv(const std::string& path, bool periodic = true);

/// Lax vector CSV: header x,re_phi1,im_phi1,re_phi2,im_phi2.
void write_lax_csv(std::ostream& os, const LaxVector& f);
void write_lax_csv(const std::string& path, const LaxVector& f);
LaxVector read_lax_csv(std::istream& is, bool periodic = true);
LaxVector read_lax_csv(const std::string& path, bool periodic = true);

}  // namespace mtm
