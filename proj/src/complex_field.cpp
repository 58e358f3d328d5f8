#include "hitchin/complex_field.hpp"

#include <cmath>
#include <string>

#include "hitchin/errors.hpp"

namespace hitchin {

double poincare_density(cd z) {
    const double s = 1.0 - std::norm(z);
    return 2.0 / (s * s);
}

HyperbolicPatch make_patch(double R, int N) {
    if (!(R > 0.0 && R <= 0.95)) throw ConfigError("patch half-width must lie in (0, 0.95], got " + std::to_string(R));
    if (N < 8) throw ConfigError("patch needs at least 8 nodes per side, got " + std::to_string(N));

    auto d = std::make_shared<HyperbolicPatch::Data>();
    d->half_width = R;
    d->n = N;
    d->h = 2.0 * R / (N - 1);
    d->z.resize(static_cast<std::size_t>(N) * N);
    d->g0.resize(d->z.size());
    d->dlog.resize(d->z.size());
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const int k = i * N + j;
            const cd z(-R + j * d->h, -R + i * d->h);
            d->z[k] = z;
            d->g0[k] = poincare_density(z);
            d->dlog[k] = 2.0 * std::conj(z) / (1.0 - std::norm(z));
            if (i > 0 && j > 0 && i < N - 1 && j < N - 1) d->interior.push_back(k);
        }
    HyperbolicPatch p;
    p.d_ = std::move(d);
    return p;
}

bool HyperbolicPatch::is_boundary(int k) const {
    const int i = row(k), j = col(k), n = d_->n;
    return i == 0 || j == 0 || i == n - 1 || j == n - 1;
}

bool HyperbolicPatch::operator==(const HyperbolicPatch& o) const {
    if (d_ == o.d_) return true;
    if (!d_ || !o.d_) return false;
    return d_->n == o.d_->n && d_->half_width == o.d_->half_width;
}

void require_same_patch(const HyperbolicPatch& a, const HyperbolicPatch& b, const char* what) {
    if (a != b) throw ShapeError(std::string(what) + ": fields live on different patches");
}

MatrixField::MatrixField(HyperbolicPatch patch, int n)
    : patch_(std::move(patch)), n_(n), data_(static_cast<std::size_t>(patch_.size()) * n * n, cd(0.0)) {}

ComplexField MatrixField::entry(int i, int j) const {
    ComplexField f(patch_);
    for (int k = 0; k < size(); ++k) f.values[k] = at(k)(i, j);
    return f;
}

namespace {

// First derivative along one grid axis at position `pos` of a line of
// `len` samples read through `get(p)`.
template <class Get>
cd axis_derivative(Get get, int pos, int len, double h) {
    if (pos == 0) return (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h);
    if (pos == len - 1) return (3.0 * get(len - 1) - 4.0 * get(len - 2) + get(len - 3)) / (2.0 * h);
    return (get(pos + 1) - get(pos - 1)) / (2.0 * h);
}

template <class Get>
cd axis_second_derivative(Get get, int pos, int len, double h) {
    if (pos == 0) return (2.0 * get(0) - 5.0 * get(1) + 4.0 * get(2) - get(3)) / (h * h);
    if (pos == len - 1) return (2.0 * get(len - 1) - 5.0 * get(len - 2) + 4.0 * get(len - 3) - get(len - 4)) / (h * h);
    return (get(pos + 1) - 2.0 * get(pos) + get(pos - 1)) / (h * h);
}

// sign = -1 gives d_z, +1 gives d_zbar.
ComplexField wirtinger(const ComplexField& f, double sign) {
    const auto& p = f.patch;
    const int N = p.nodes_per_side();
    const double h = p.spacing();
    ComplexField out(p);
    const cd iu(0.0, sign);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const cd dx = axis_derivative([&](int c) { return f.values[i * N + c]; }, j, N, h);
            const cd dy = axis_derivative([&](int r) { return f.values[r * N + j]; }, i, N, h);
            out.values[i * N + j] = 0.5 * (dx + iu * dy);
        }
    return out;
}

MatrixField wirtinger(const MatrixField& f, double sign) {
    const int n = f.rank();
    MatrixField out(f.patch(), n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const ComplexField d = wirtinger(f.entry(a, b), sign);
            for (int k = 0; k < f.size(); ++k) out.at(k)(a, b) = d.values[k];
        }
    return out;
}

}  // namespace

ComplexField d_z(const ComplexField& f) { return wirtinger(f, -1.0); }
ComplexField d_zbar(const ComplexField& f) { return wirtinger(f, +1.0); }
MatrixField d_z(const MatrixField& f) { return wirtinger(f, -1.0); }
MatrixField d_zbar(const MatrixField& f) { return wirtinger(f, +1.0); }

ComplexField d_zbar_d_z(const ComplexField& f) {
    const auto& p = f.patch;
    const int N = p.nodes_per_side();
    const double h = p.spacing();
    ComplexField out(p);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const cd dxx = axis_second_derivative([&](int c) { return f.values[i * N + c]; }, j, N, h);
            const cd dyy = axis_second_derivative([&](int r) { return f.values[r * N + j]; }, i, N, h);
            out.values[i * N + j] = 0.25 * (dxx + dyy);
        }
    return out;
}

ComplexField sample_polynomial(const std::vector<cd>& coeffs, const HyperbolicPatch& patch) {
    ComplexField f(patch);
    for (int k = 0; k < patch.size(); ++k) {
        const cd z = patch.node(k);
        cd acc = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
        f.values[k] = acc;
    }
    return f;
}

double interior_sup_norm(const ComplexField& f) {
    double m = 0.0;
    for (int k : f.patch.interior()) m = std::max(m, std::abs(f.values[k]));
    return m;
}

}  // namespace hitchin
