#include "mtm/fields.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mtm {

Grid::Grid(double x_min, double x_max, int n, bool periodic)
    : x_min_(x_min), x_max_(x_max), n_(n), dx_(0.0), periodic_(periodic) {
    if (n < 8) throw ParameterError("grid needs at least 8 points");
    if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max))
        throw ParameterError("grid requires finite x_max > x_min");
    dx_ = (x_max - x_min) / n;
}

Grid Grid::symmetric(double half_width, int n, bool periodic) {
    return Grid(-half_width, half_width, n, periodic);
}

std::vector<double> Grid::points() const {
    std::vector<double> xs(n_);
    for (int j = 0; j < n_; ++j) xs[j] = x(j);
    return xs;
}

int Grid::nearest(double x) const {
    long j = std::lround((x - x_min_) / dx_);
    if (j < 0) j = 0;
    if (j >= n_) j = n_ - 1;
    return static_cast<int>(j);
}

bool Grid::operator==(const Grid& o) const {
    // Grids read back from CSV carry round-off in the end points.
    const double tol = 1e-9 * dx_;
    return n_ == o.n_ && periodic_ == o.periodic_ && std::abs(x_min_ - o.x_min_) <= tol &&
           std::abs(x_max_ - o.x_max_) <= tol;
}

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (a != b) throw GridMismatch(std::string(where) + ": operands live on different grids");
}

SpinorField::SpinorField(const Grid& g) : grid(g), u(g.n()), v(g.n()) {}

SpinorField::SpinorField(const Grid& g, CArray u_, CArray v_)
    : grid(g), u(std::move(u_)), v(std::move(v_)) {
    if (static_cast<int>(u.size()) != g.n() || static_cast<int>(v.size()) != g.n())
        throw GridMismatch("SpinorField: component length differs from grid size");
}

bool SpinorField::finite() const {
    for (int j = 0; j < grid.n(); ++j) {
        if (!std::isfinite(u[j].real()) || !std::isfinite(u[j].imag())) return false;
        if (!std::isfinite(v[j].real()) || !std::isfinite(v[j].imag())) return false;
    }
    return true;
}

LaxVector::LaxVector(const Grid& g) : grid(g), phi1(g.n()), phi2(g.n()) {}

LaxVector::LaxVector(const Grid& g, CArray p1, CArray p2)
    : grid(g), phi1(std::move(p1)), phi2(std::move(p2)) {
    if (static_cast<int>(phi1.size()) != g.n() || static_cast<int>(phi2.size()) != g.n())
        throw GridMismatch("LaxVector: component length differs from grid size");
}

namespace {

template <class F>
CArray zip(const CArray& a, const CArray& b, F op) {
    CArray out(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) out[j] = op(a[j], b[j]);
    return out;
}

CArray scale(cplx s, const CArray& a) {
    CArray out(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) out[j] = s * a[j];
    return out;
}

}  // namespace

SpinorField operator+(const SpinorField& a, const SpinorField& b) {
    require_same_grid(a.grid, b.grid, "SpinorField +");
    return {a.grid, zip(a.u, b.u, std::plus<>()), zip(a.v, b.v, std::plus<>())};
}

SpinorField operator-(const SpinorField& a, const SpinorField& b) {
    require_same_grid(a.grid, b.grid, "SpinorField -");
    return {a.grid, zip(a.u, b.u, std::minus<>()), zip(a.v, b.v, std::minus<>())};
}

SpinorField operator*(cplx s, const SpinorField& a) { return {a.grid, scale(s, a.u), scale(s, a.v)}; }

LaxVector operator+(const LaxVector& a, const LaxVector& b) {
    require_same_grid(a.grid, b.grid, "LaxVector +");
    return {a.grid, zip(a.phi1, b.phi1, std::plus<>()), zip(a.phi2, b.phi2, std::plus<>())};
}

LaxVector operator-(const LaxVector& a, const LaxVector& b) {
    require_same_grid(a.grid, b.grid, "LaxVector -");
    return {a.grid, zip(a.phi1, b.phi1, std::minus<>()), zip(a.phi2, b.phi2, std::minus<>())};
}

LaxVector operator*(cplx s, const LaxVector& a) { return {a.grid, scale(s, a.phi1), scale(s, a.phi2)}; }

LaxVector sigma3(const LaxVector& f) { return {f.grid, f.phi1, scale(-1.0, f.phi2)}; }

double quad_weight(const Grid& g, int j) {
    if (g.periodic()) return g.dx();
    return (j == 0 || j == g.n() - 1) ? 0.5 * g.dx() : g.dx();
}

double integrate(const Grid& g, const std::vector<double>& f) {
    double s = 0.0;
    for (int j = 0; j < g.n(); ++j) s += quad_weight(g, j) * f[j];
    return s;
}

cplx integrate(const Grid& g, const CArray& f) {
    cplx s = 0.0;
    for (int j = 0; j < g.n(); ++j) s += quad_weight(g, j) * f[j];
    return s;
}

std::vector<double> cumulative_trapezoid(const Grid& g, const std::vector<double>& f) {
    std::vector<double> c(g.n(), 0.0);
    for (int j = 1; j < g.n(); ++j) c[j] = c[j - 1] + 0.5 * g.dx() * (f[j - 1] + f[j]);
    return c;
}

namespace {

template <class T>
std::vector<T> cumulative4_impl(const Grid& g, const std::vector<T>& f) {
    const int n = g.n();
    const double h = g.dx();
    std::vector<T> c(n);
    c[0] = T(0);
    for (int j = 0; j + 1 < n; ++j) {
        T panel;
        if (j >= 1 && j + 2 < n)
            panel = h / 24.0 * (-f[j - 1] + 13.0 * f[j] + 13.0 * f[j + 1] - f[j + 2]);
        else if (j == 0)
            panel = h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
        else
            panel = h / 24.0 * (9.0 * f[j + 1] + 19.0 * f[j] - 5.0 * f[j - 1] + f[j - 2]);
        c[j + 1] = c[j] + panel;
    }
    return c;
}

}  // namespace

std::vector<double> cumulative_integral4(const Grid& g, const std::vector<double>& f) {
    return cumulative4_impl(g, f);
}

CArray cumulative_integral4(const Grid& g, const CArray& f) { return cumulative4_impl(g, f); }

double l2_norm(const Grid& g, const CArray& f) {
    double s = 0.0;
    for (int j = 0; j < g.n(); ++j) s += quad_weight(g, j) * std::norm(f[j]);
    return std::sqrt(s);
}

double l2_norm_sq(const SpinorField& f) {
    double s = 0.0;
    for (int j = 0; j < f.grid.n(); ++j) s += quad_weight(f.grid, j) * (std::norm(f.u[j]) + std::norm(f.v[j]));
    return s;
}

double l2_norm_sq(const LaxVector& f) {
    double s = 0.0;
    for (int j = 0; j < f.grid.n(); ++j)
        s += quad_weight(f.grid, j) * (std::norm(f.phi1[j]) + std::norm(f.phi2[j]));
    return s;
}

double split_norm(const SpinorField& f) { return l2_norm(f.grid, f.u) + l2_norm(f.grid, f.v); }

cplx inner_product(const LaxVector& f, const LaxVector& g) {
    require_same_grid(f.grid, g.grid, "inner_product");
    cplx s = 0.0;
    for (int j = 0; j < f.grid.n(); ++j)
        s += quad_weight(f.grid, j) * (std::conj(f.phi1[j]) * g.phi1[j] + std::conj(f.phi2[j]) * g.phi2[j]);
    return s;
}

cplx inner_product(const SpinorField& f, const SpinorField& g) {
    return inner_product(LaxVector(f.grid, f.u, f.v), LaxVector(g.grid, g.u, g.v));
}

CArray derivative(const Grid& g, const CArray& f, int order) {
    const int n = g.n();
    const double h = g.dx();
    CArray d(n);
    auto at = [&](int j) -> cplx {
        if (g.periodic()) return f[((j % n) + n) % n];
        return f[j];
    };
    for (int j = 0; j < n; ++j) {
        bool interior4 = g.periodic() || (j >= 2 && j <= n - 3);
        bool interior2 = g.periodic() || (j >= 1 && j <= n - 2);
        if (order >= 4 && interior4) {
            d[j] = (at(j - 2) - 8.0 * at(j - 1) + 8.0 * at(j + 1) - at(j + 2)) / (12.0 * h);
        } else if (interior2) {
            d[j] = (at(j + 1) - at(j - 1)) / (2.0 * h);
        } else if (j == 0) {
            d[j] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
        } else {
            d[j] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
        }
    }
    return d;
}

double h1_seminorm(const Grid& g, const CArray& f) { return l2_norm(g, derivative(g, f)); }

double h1_seminorm(const LaxVector& f) {
    double a = h1_seminorm(f.grid, f.phi1), b = h1_seminorm(f.grid, f.phi2);
    return std::sqrt(a * a + b * b);
}

double h1_seminorm(const SpinorField& f) {
    double a = h1_seminorm(f.grid, f.u), b = h1_seminorm(f.grid, f.v);
    return std::sqrt(a * a + b * b);
}

double sup_norm(const CArray& f) {
    double m = 0.0;
    for (const auto& z : f) m = std::max(m, std::abs(z));
    return m;
}

namespace {

void write_pairs_csv(std::ostream& os, const char* header, const Grid& g, const CArray& a, const CArray& b) {
    os << header << '\n';
    os << std::setprecision(17);
    for (int j = 0; j < g.n(); ++j)
        os << g.x(j) << ',' << a[j].real() << ',' << a[j].imag() << ',' << b[j].real() << ',' << b[j].imag()
           << '\n';
}

template <class Writer>
void write_atomically(const std::string& path, Writer w) {
    std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream os(tmp);
        if (!os) throw FormatError("cannot open " + tmp.string() + " for writing");
        w(os);
        if (!os) throw FormatError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

struct PairColumns {
    std::vector<double> x;
    CArray a, b;
};

PairColumns read_pairs_csv(std::istream& is) {
    PairColumns c;
    std::string line;
    if (!std::getline(is, line)) throw FormatError("empty CSV");
    int row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        double vals[5];
        for (int k = 0; k < 5; ++k) {
            std::string cell;
            if (!std::getline(ss, cell, ',')) throw FormatError("row " + std::to_string(row) + ": expected 5 columns");
            try {
                vals[k] = std::stod(cell);
            } catch (const std::exception&) {
                throw FormatError("row " + std::to_string(row) + ": bad number '" + cell + "'");
            }
        }
        c.x.push_back(vals[0]);
        c.a.emplace_back(vals[1], vals[2]);
        c.b.emplace_back(vals[3], vals[4]);
    }
    return c;
}

Grid grid_from_samples(const std::vector<double>& x, bool periodic) {
    const int n = static_cast<int>(x.size());
    if (n < 8) throw FormatError("CSV needs at least 8 rows");
    double dx = (x[n - 1] - x[0]) / (n - 1);
    for (int j = 1; j < n; ++j)
        if (std::abs(x[j] - x[j - 1] - dx) > 1e-9 * std::max(1.0, std::abs(dx)) + 1e-12)
            throw FormatError("CSV x column is not uniformly spaced");
    return Grid(x[0], x[0] + n * dx, n, periodic);
}

}  // namespace

void write_field_csv(std::ostream& os, const SpinorField& f) {
    write_pairs_csv(os, "x,re_u,im_u,re_v,im_v", f.grid, f.u, f.v);
}

void write_field_csv(const std::string& path, const SpinorField& f) {
    write_atomically(path, [&](std::ostream& os) { write_field_csv(os, f); });
}

SpinorField read_field_csv(std::istream& is, bool periodic) {
    auto c = read_pairs_csv(is);
    return SpinorField(grid_from_samples(c.x, periodic), std::move(c.a), std::move(c.b));
}

SpinorField read_field_csv(const std::string& path, bool periodic) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open " + path);
    return read_field_csv(is, periodic);
}

void write_lax_csv(std::ostream& os, const LaxVector& f) {
    write_pairs_csv(os, "x,re_phi1,im_phi1,re_phi2,im_phi2", f.grid, f.phi1, f.phi2);
}

void write_lax_csv(const std::string& path, const LaxVector& f) {
    write_atomically(path, [&](std::ostream& os) { write_lax_csv(os, f); });
}

LaxVector read_lax_csv(std::istream& is, bool periodic) {
    auto c = read_pairs_csv(is);
    return LaxVector(grid_from_samples(c.x, periodic), std::move(c.a), std::move(c.b));
}

LaxVector read_lax_csv(const std::string& path, bool periodic) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open " + path);
    return read_lax_csv(is, periodic);
}

}  // namespace mtm
