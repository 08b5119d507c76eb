#include "qnls/grid.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <fftw3.h>
#include <fmt/core.h>

#include "qnls/error.hpp"

namespace qnls {

namespace {

// Planner calls are not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

struct Grid::Impl {
  int dim = 1;
  std::size_t n = 0;
  double length = 0.0;
  double spacing = 0.0;
  std::size_t size = 0;
  std::vector<double> coords;
  std::vector<double> wavenumbers;
  std::vector<double> k2;
  std::vector<double> x2;
  fftw_plan forward_plan = nullptr;
  fftw_plan inverse_plan = nullptr;

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (forward_plan) fftw_destroy_plan(forward_plan);
    if (inverse_plan) fftw_destroy_plan(inverse_plan);
  }
};

Grid::Grid(int dim, std::size_t n, double length) {
  if (dim < 1 || dim > 3) throw ConfigError(fmt::format("grid dimension must be 1..3 (got {})", dim));
  if (n < 8 || !is_power_of_two(n)) {
    throw ConfigError(fmt::format("grid samples per axis must be a power of two >= 8 (got {})", n));
  }
  if (!std::isfinite(length) || length <= 0.0) {
    throw ConfigError(fmt::format("grid length must be finite and > 0 (got {})", length));
  }
  auto impl = std::make_shared<Impl>();
  impl->dim = dim;
  impl->n = n;
  impl->length = length;
  impl->spacing = length / static_cast<double>(n);
  impl->size = 1;
  for (int d = 0; d < dim; ++d) impl->size *= n;

  impl->coords.resize(n);
  impl->wavenumbers.resize(n);
  const double dk = 2.0 * M_PI / length;
  for (std::size_t i = 0; i < n; ++i) {
    impl->coords[i] = -0.5 * length + static_cast<double>(i) * impl->spacing;
    const auto freq = i < n / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(n);
    impl->wavenumbers[i] = dk * freq;
  }
  impl->k2.assign(impl->size, 0.0);
  impl->x2.assign(impl->size, 0.0);
  for (std::size_t flat = 0; flat < impl->size; ++flat) {
    std::size_t rest = flat;
    double k2 = 0.0, x2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      const std::size_t idx = rest % n;
      rest /= n;
      k2 += impl->wavenumbers[idx] * impl->wavenumbers[idx];
      x2 += impl->coords[idx] * impl->coords[idx];
    }
    impl->k2[flat] = k2;
    impl->x2[flat] = x2;
  }

  std::vector<int> shape(static_cast<std::size_t>(dim), static_cast<int>(n));
  auto* scratch = fftw_alloc_complex(impl->size);
  {
    std::lock_guard lock(planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    impl->forward_plan = fftw_plan_dft(dim, shape.data(), scratch, scratch, FFTW_FORWARD, flags);
    impl->inverse_plan = fftw_plan_dft(dim, shape.data(), scratch, scratch, FFTW_BACKWARD, flags);
  }
  fftw_free(scratch);
  impl_ = std::move(impl);
}

Grid make_grid(int dim, std::size_t n, double length) { return Grid(dim, n, length); }

int Grid::dim() const { return impl_->dim; }
std::size_t Grid::n() const { return impl_->n; }
double Grid::length() const { return impl_->length; }
double Grid::spacing() const { return impl_->spacing; }
std::size_t Grid::size() const { return impl_->size; }
double Grid::cell_volume() const { return std::pow(impl_->spacing, impl_->dim); }
double Grid::coordinate(std::size_t i) const { return impl_->coords.at(i); }
double Grid::wavenumber(std::size_t i) const { return impl_->wavenumbers.at(i); }
std::span<const double> Grid::coordinates() const { return impl_->coords; }
std::span<const double> Grid::wavenumbers() const { return impl_->wavenumbers; }
std::span<const double> Grid::k_squared() const { return impl_->k2; }
std::span<const double> Grid::x_squared() const { return impl_->x2; }

std::size_t Grid::axis_index(std::size_t flat, int axis) const {
  // row-major: axis dim-1 is fastest
  std::size_t stride = 1;
  for (int d = impl_->dim - 1; d > axis; --d) stride *= impl_->n;
  return (flat / stride) % impl_->n;
}

void Grid::forward(std::span<complex> data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(impl_->forward_plan, p, p);
}

void Grid::inverse(std::span<complex> data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(impl_->inverse_plan, p, p);
  const double scale = 1.0 / static_cast<double>(impl_->size);
  for (auto& v : data) v *= scale;
}

bool Grid::operator==(const Grid& other) const {
  return impl_ == other.impl_ ||
         (dim() == other.dim() && n() == other.n() && length() == other.length());
}

Field::Field(Grid grid) : grid_(std::move(grid)), values_(grid_.size()) {}

Field::Field(Grid grid, std::vector<complex> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw ConfigError(fmt::format("field has {} samples, grid needs {}", values_.size(), grid_.size()));
  }
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](const complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

// ---------------------------------------------------------------- spectral ops

Field spectral_laplacian(const Field& f) {
  const auto& g = f.grid();
  std::vector<complex> work(f.values().begin(), f.values().end());
  g.forward(work);
  const auto k2 = g.k_squared();
  for (std::size_t i = 0; i < work.size(); ++i) work[i] *= -k2[i];
  g.inverse(work);
  return Field(g, std::move(work));
}

std::vector<double> spectral_laplacian(const Grid& grid, std::span<const double> values) {
  std::vector<complex> work(values.begin(), values.end());
  grid.forward(work);
  const auto k2 = grid.k_squared();
  for (std::size_t i = 0; i < work.size(); ++i) work[i] *= -k2[i];
  grid.inverse(work);
  std::vector<double> out(work.size());
  for (std::size_t i = 0; i < work.size(); ++i) out[i] = work[i].real();
  return out;
}

namespace {

std::vector<std::vector<complex>> gradient_from_spectrum(const Grid& g, const std::vector<complex>& spectrum) {
  std::vector<std::vector<complex>> out(static_cast<std::size_t>(g.dim()));
  const auto k = g.wavenumbers();
  for (int axis = 0; axis < g.dim(); ++axis) {
    auto& d = out[static_cast<std::size_t>(axis)];
    d = spectrum;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= complex(0.0, k[g.axis_index(i, axis)]);
    g.inverse(d);
  }
  return out;
}

}  // namespace

std::vector<std::vector<complex>> spectral_gradient(const Field& f) {
  std::vector<complex> spectrum(f.values().begin(), f.values().end());
  f.grid().forward(spectrum);
  return gradient_from_spectrum(f.grid(), spectrum);
}

std::vector<std::vector<double>> spectral_gradient(const Grid& grid, std::span<const double> values) {
  std::vector<complex> spectrum(values.begin(), values.end());
  grid.forward(spectrum);
  // The Nyquist mode has no real-valued derivative; drop it for real input.
  const std::size_t nyq = grid.n() / 2;
  auto complex_grad = gradient_from_spectrum(grid, spectrum);
  std::vector<std::vector<double>> out(complex_grad.size());
  for (int axis = 0; axis < grid.dim(); ++axis) {
    auto& d = complex_grad[static_cast<std::size_t>(axis)];
    grid.forward(d);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (grid.axis_index(i, axis) == nyq) d[i] = 0.0;
    }
    grid.inverse(d);
    auto& r = out[static_cast<std::size_t>(axis)];
    r.resize(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) r[i] = d[i].real();
  }
  return out;
}

double gradient_norm_sq(const Field& f) {
  const auto& g = f.grid();
  std::vector<complex> spectrum(f.values().begin(), f.values().end());
  g.forward(spectrum);
  const auto k2 = g.k_squared();
  double sum = 0.0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) sum += k2[i] * std::norm(spectrum[i]);
  return sum * g.cell_volume() / static_cast<double>(g.size());
}

double gradient_norm_sq(const Grid& grid, std::span<const double> values) {
  std::vector<complex> samples(values.begin(), values.end());
  return gradient_norm_sq(Field(grid, std::move(samples)));
}

double moment(const Field& f, Weight weight) {
  const auto x2 = f.grid().x_squared();
  double sum = 0.0;
  const auto v = f.values();
  if (weight == Weight::One) {
    for (const auto& z : v) sum += std::norm(z);
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) sum += x2[i] * std::norm(v[i]);
  }
  return sum * f.grid().cell_volume();
}

double boundary_mass_fraction(const Field& f) {
  const auto& g = f.grid();
  const double edge = 0.45 * g.length();
  const auto coords = g.coordinates();
  double total = 0.0, shell = 0.0;
  const auto v = f.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double m = std::norm(v[i]);
    total += m;
    bool outer = false;
    for (int axis = 0; axis < g.dim() && !outer; ++axis) {
      outer = std::fabs(coords[g.axis_index(i, axis)]) >= edge;
    }
    if (outer) shell += m;
  }
  return total > 0.0 ? shell / total : 0.0;
}

double spectral_tail_fraction(const Field& f) {
  const auto& g = f.grid();
  std::vector<complex> spectrum(f.values().begin(), f.values().end());
  g.forward(spectrum);
  const std::size_t n = g.n();
  const std::size_t cut = n / 4;
  double total = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    const double m = std::norm(spectrum[i]);
    total += m;
    bool high = false;
    for (int axis = 0; axis < g.dim() && !high; ++axis) {
      const std::size_t idx = g.axis_index(i, axis);
      const std::size_t freq = idx <= n / 2 ? idx : n - idx;
      high = freq > cut;
    }
    if (high) tail += m;
  }
  return total > 0.0 ? tail / total : 0.0;
}

// --------------------------------------------------------------- initial data

namespace {

void require_finite(std::initializer_list<double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw ConfigError(fmt::format("{}: parameters must be finite", what));
  }
}

double interpolate(const ProfileSpec& p, double r) {
  const auto& rs = p.radius;
  if (r <= rs.front()) return p.values.front();
  if (r >= rs.back()) return 0.0;
  const auto it = std::upper_bound(rs.begin(), rs.end(), r);
  const auto hi = static_cast<std::size_t>(it - rs.begin());
  const std::size_t lo = hi - 1;
  const double t = (r - rs[lo]) / (rs[hi] - rs[lo]);
  return (1.0 - t) * p.values[lo] + t * p.values[hi];
}

}  // namespace

Field synthesize_initial(const Grid& grid, const InitialSpec& spec) {
  Field out(grid);
  const auto x2 = grid.x_squared();
  auto values = out.values();
  if (const auto* gs = std::get_if<GaussianSpec>(&spec)) {
    require_finite({gs->amplitude, gs->sigma, gs->chirp}, "gaussian");
    if (gs->sigma <= 0.0) throw ConfigError("gaussian: sigma must be > 0");
    const double inv = 1.0 / (2.0 * gs->sigma * gs->sigma);
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = gs->amplitude * std::exp(-x2[i] * inv) * std::polar(1.0, gs->chirp * x2[i]);
    }
  } else if (const auto* ss = std::get_if<SechSpec>(&spec)) {
    require_finite({ss->amplitude, ss->scale, ss->power}, "sech");
    if (grid.dim() != 1) throw ConfigError("sech initial data is one-dimensional only");
    if (ss->scale <= 0.0) throw ConfigError("sech: scale must be > 0");
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double x = grid.coordinate(i);
      values[i] = ss->amplitude * std::pow(1.0 / std::cosh(x / ss->scale), ss->power);
    }
  } else {
    const auto& ps = std::get<ProfileSpec>(spec);
    require_finite({ps.scale, ps.chirp}, "profile");
    if (ps.radius.size() < 2 || ps.radius.size() != ps.values.size()) {
      throw ConfigError("profile: need matching radius/value tables with >= 2 nodes");
    }
    if (!std::is_sorted(ps.radius.begin(), ps.radius.end())) throw ConfigError("profile: radius must be sorted");
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = ps.scale * interpolate(ps, std::sqrt(x2[i])) * std::polar(1.0, ps.chirp * x2[i]);
    }
  }
  if (!out.all_finite()) throw ConfigError("initial data produced non-finite samples");
  return out;
}

}  // namespace qnls
