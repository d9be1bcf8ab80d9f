#include "aggbfgs/problems.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include <Eigen/QR>

#include "aggbfgs/error.hpp"

namespace aggbfgs {

double Problem::evaluate(const Vector& x, Vector& g) const {
  g = gradient(x);
  return value(x);
}

double gradient_check(const Problem& problem, const Vector& x) {
  const Vector g = problem.gradient(x);
  double worst = 0.0;
  Vector probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::abs(x(i)));
    probe(i) = x(i) + h;
    const double up = problem.value(probe);
    probe(i) = x(i) - h;
    const double down = problem.value(probe);
    probe(i) = x(i);
    const double fd = (up - down) / (2.0 * h);
    const double scale = std::max({1.0, std::abs(g(i)), std::abs(fd)});
    worst = std::max(worst, std::abs(fd - g(i)) / scale);
  }
  return worst;
}

// ---------------------------------------------------------------- seeding

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t state = base;
  std::uint64_t out = splitmix64(state);
  state = out ^ stream;
  out = splitmix64(state);
  state = out ^ index;
  return splitmix64(state);
}

std::uint64_t stream_id(const std::string& name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Vector random_normal(Rng& rng, Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

// ---------------------------------------------------------------- problems

namespace {

Problem rosenbrock_classic() {
  Problem p;
  p.name = "rosenbrock";
  p.dim = 2;
  p.x0 = Vector(2);
  p.x0 << -1.2, 1.0;
  p.value = [](const Vector& x) {
    const double a = x(1) - x(0) * x(0);
    const double b = 1.0 - x(0);
    return 100.0 * a * a + b * b;
  };
  p.gradient = [](const Vector& x) {
    const double a = x(1) - x(0) * x(0);
    Vector g(2);
    g(0) = -400.0 * a * x(0) - 2.0 * (1.0 - x(0));
    g(1) = 200.0 * a;
    return g;
  };
  p.minimizer = Vector::Ones(2);
  p.optimal_value = 0.0;
  return p;
}

Problem rosenbrock_chained(Index n) {
  Problem p;
  p.name = "chained_rosenbrock:" + std::to_string(n);
  p.dim = n;
  p.x0 = Vector(n);
  for (Index i = 0; i < n; ++i) p.x0(i) = i % 2 == 0 ? -1.2 : 1.0;
  p.value = [](const Vector& x) {
    double f = 0.0;
    for (Index i = 0; i + 1 < x.size(); ++i) {
      const double a = x(i + 1) - x(i) * x(i);
      const double b = 1.0 - x(i);
      f += 100.0 * a * a + b * b;
    }
    return f;
  };
  p.gradient = [](const Vector& x) {
    Vector g = Vector::Zero(x.size());
    for (Index i = 0; i + 1 < x.size(); ++i) {
      const double a = x(i + 1) - x(i) * x(i);
      g(i) += -400.0 * a * x(i) - 2.0 * (1.0 - x(i));
      g(i + 1) += 200.0 * a;
    }
    return g;
  };
  p.minimizer = Vector::Ones(n);
  p.optimal_value = 0.0;
  return p;
}

Problem quadratic_problem(std::string name, Matrix a, Vector x0) {
  Problem p;
  p.name = std::move(name);
  p.dim = a.rows();
  p.x0 = std::move(x0);
  auto shared = std::make_shared<const Matrix>(std::move(a));
  p.value = [shared](const Vector& x) { return 0.5 * x.dot(*shared * x); };
  p.gradient = [shared](const Vector& x) -> Vector { return *shared * x; };
  p.minimizer = Vector::Zero(p.dim);
  p.optimal_value = 0.0;
  p.hessian = *shared;
  p.convex = true;
  return p;
}

/// Separable objective sum_i phi(i, x_i) with derivative dphi.
Problem separable(std::string name, Index n, double start,
                  std::function<double(Index, double)> phi,
                  std::function<double(Index, double)> dphi, bool convex) {
  Problem p;
  p.name = std::move(name);
  p.dim = n;
  p.x0 = Vector::Constant(n, start);
  p.value = [phi](const Vector& x) {
    double f = 0.0;
    for (Index i = 0; i < x.size(); ++i) f += phi(i, x(i));
    return f;
  };
  p.gradient = [dphi](const Vector& x) {
    Vector g(x.size());
    for (Index i = 0; i < x.size(); ++i) g(i) = dphi(i, x(i));
    return g;
  };
  p.convex = convex;
  return p;
}

Problem sphere(Index n) {
  Vector x0 = Vector::Ones(n);
  return quadratic_problem("sphere:" + std::to_string(n), Matrix::Identity(n, n), x0);
}

/// f = (x_1 - 1)^2 / 2 + sum_i (x_{i+1} - x_i)^2 / 2, convex with a
/// tridiagonal Hessian.
Problem tridiagonal_quadratic(Index n) {
  Problem p;
  p.name = "tridiagonal_quadratic:" + std::to_string(n);
  p.dim = n;
  p.x0 = Vector::Zero(n);
  p.value = [](const Vector& x) {
    double f = 0.5 * (x(0) - 1.0) * (x(0) - 1.0);
    for (Index i = 0; i + 1 < x.size(); ++i) {
      const double d = x(i + 1) - x(i);
      f += 0.5 * d * d;
    }
    return f;
  };
  p.gradient = [](const Vector& x) {
    Vector g = Vector::Zero(x.size());
    g(0) = x(0) - 1.0;
    for (Index i = 0; i + 1 < x.size(); ++i) {
      const double d = x(i + 1) - x(i);
      g(i) -= d;
      g(i + 1) += d;
    }
    return g;
  };
  p.minimizer = Vector::Ones(n);
  p.optimal_value = 0.0;
  p.convex = true;
  return p;
}

/// f = sum over blocks of (x1 + 10 x2)^2 + 5 (x3 - x4)^2 + (x2 - 2 x3)^4
/// + 10 (x1 - x4)^4, convex with a singular Hessian at the minimizer.
Problem extended_powell(Index n) {
  Problem p;
  p.name = "extended_powell:" + std::to_string(n);
  p.dim = n;
  p.x0 = Vector(n);
  for (Index i = 0; i < n; i += 4) {
    p.x0(i) = 3.0;
    p.x0(i + 1) = -1.0;
    p.x0(i + 2) = 0.0;
    p.x0(i + 3) = 1.0;
  }
  p.value = [](const Vector& x) {
    double f = 0.0;
    for (Index i = 0; i < x.size(); i += 4) {
      const double a = x(i) + 10.0 * x(i + 1);
      const double b = x(i + 2) - x(i + 3);
      const double c = x(i + 1) - 2.0 * x(i + 2);
      const double d = x(i) - x(i + 3);
      f += a * a + 5.0 * b * b + std::pow(c, 4) + 10.0 * std::pow(d, 4);
    }
    return f;
  };
  p.gradient = [](const Vector& x) {
    Vector g(x.size());
    for (Index i = 0; i < x.size(); i += 4) {
      const double a = x(i) + 10.0 * x(i + 1);
      const double b = x(i + 2) - x(i + 3);
      const double c = x(i + 1) - 2.0 * x(i + 2);
      const double d = x(i) - x(i + 3);
      g(i) = 2.0 * a + 40.0 * d * d * d;
      g(i + 1) = 20.0 * a + 4.0 * c * c * c;
      g(i + 2) = 10.0 * b - 8.0 * c * c * c;
      g(i + 3) = -10.0 * b - 40.0 * d * d * d;
    }
    return g;
  };
  p.minimizer = Vector::Zero(n);
  p.optimal_value = 0.0;
  p.convex = true;
  return p;
}

/// f = sum_i (x_i^2 + x_{i+1}^2)^2 - 4 x_i + 3, convex.
Problem engval1(Index n) {
  Problem p;
  p.name = "engval1:" + std::to_string(n);
  p.dim = n;
  p.x0 = Vector::Constant(n, 2.0);
  p.value = [](const Vector& x) {
    double f = 0.0;
    for (Index i = 0; i + 1 < x.size(); ++i) {
      const double q = x(i) * x(i) + x(i + 1) * x(i + 1);
      f += q * q - 4.0 * x(i) + 3.0;
    }
    return f;
  };
  p.gradient = [](const Vector& x) {
    Vector g = Vector::Zero(x.size());
    for (Index i = 0; i + 1 < x.size(); ++i) {
      const double q = x(i) * x(i) + x(i + 1) * x(i + 1);
      g(i) += 4.0 * q * x(i) - 4.0;
      g(i + 1) += 4.0 * q * x(i + 1);
    }
    return g;
  };
  p.convex = true;
  return p;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, sep)) parts.push_back(item);
  return parts;
}

Index parse_dim(const std::string& text, const std::string& name) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size() || v < 1) throw std::invalid_argument(text);
    return static_cast<Index>(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::UnknownProblem, "bad dimension in problem name " + name);
  }
}

}  // namespace

Problem rosenbrock(RosenbrockVariant variant, Index n) {
  if (variant == RosenbrockVariant::Classic2d) return rosenbrock_classic();
  if (n < 2) throw Error(ErrorCode::InvalidInput, "chained Rosenbrock needs n >= 2");
  return rosenbrock_chained(n);
}

Matrix random_spd_matrix(Index n, double target_cond, Rng& rng) {
  if (n < 1) throw Error(ErrorCode::InvalidInput, "dimension must be positive");
  if (!(target_cond >= 1.0)) {
    throw Error(ErrorCode::InvalidInput, "target condition number must be at least 1");
  }
  Matrix gauss(n, n);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < n; ++r) gauss(r, c) = normal(rng);
  }
  const Matrix q = gauss.householderQr().householderQ() * Matrix::Identity(n, n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double log_cond = std::log(target_cond);
  Vector spectrum(n);
  for (Index i = 0; i < n; ++i) spectrum(i) = std::exp(-log_cond * unit(rng));
  spectrum(0) = 1.0;
  if (n > 1) spectrum(n - 1) = 1.0 / target_cond;
  Matrix a = q * spectrum.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

Problem random_spd_quadratic(Index n, double target_cond, std::uint64_t seed) {
  Rng rng(seed);
  Matrix a = random_spd_matrix(n, target_cond, rng);
  Vector x0 = random_normal(rng, n);
  std::ostringstream name;
  name << "spd_quadratic:" << n << ':' << target_cond << ':' << seed;
  return quadratic_problem(name.str(), std::move(a), std::move(x0));
}

PairStream mock_pair_sequence(const PairStreamSpec& spec, bool plant_dependence) {
  if (spec.n < 1 || spec.m < 1 || spec.m > spec.n) {
    throw Error(ErrorCode::InvalidInput, "pair stream needs 1 <= m <= n");
  }
  const Index steps = spec.steps > 0 ? spec.steps : spec.m;
  if (steps < spec.m) {
    throw Error(ErrorCode::InvalidInput, "pair stream needs at least m steps");
  }
  Rng rng(spec.seed);
  PairStream out;
  out.hessian = random_spd_matrix(spec.n, spec.target_cond, rng);
  const Matrix& a = out.hessian;
  Vector x = random_normal(rng, spec.n);
  for (Index k = 0; k < steps; ++k) {
    const Vector g = a * x;
    const double gnorm = g.norm();
    if (gnorm == 0.0) throw Error(ErrorCode::CurvatureViolation, "mock run reached the minimizer");
    Vector d;
    int attempts = 0;
    for (;;) {
      d = -g;
      if (spec.noise_scale > 0.0) d += spec.noise_scale * gnorm * random_normal(rng, spec.n);
      if (g.dot(d) < 0.0) break;
      if (++attempts >= 100) {
        throw Error(ErrorCode::CurvatureViolation, "no descent direction after 100 draws");
      }
    }
    const Vector ad = a * d;
    const double alpha = -g.dot(d) / d.dot(ad);
    Vector s = alpha * d;
    Vector y = alpha * ad;
    x += s;
    out.pairs.push_back(make_pair(std::move(s), std::move(y)));
  }
  if (plant_dependence) {
    PlantedDependence planted;
    planted.tau = random_normal(rng, spec.m);
    planted.s0 = Vector::Zero(spec.n);
    for (Index k = 0; k < spec.m; ++k) {
      planted.s0 += planted.tau(k) * out.pairs[static_cast<std::size_t>(k)].s;
    }
    planted.y0 = a * planted.s0;
    planted.rho0 = 1.0 / planted.s0.dot(planted.y0);
    out.planted = std::move(planted);
  }
  return out;
}

// ---------------------------------------------------------------- registry

std::vector<std::string> suite_names() {
  return {
      "chained_rosenbrock:10",   "chained_rosenbrock:1000", "spd_quadratic:100:1000:1",
      "spd_quadratic:300:10000:2", "diagonal_quadratic:3000", "tridiagonal_quadratic:100",
      "raydan1:1000",            "log_cosh:500",            "quartic:2000",
      "extended_powell:100",     "engval1:1000",            "trigonometric:200",
  };
}

Problem make_problem(const std::string& name) {
  const std::vector<std::string> parts = split(name, ':');
  if (parts.empty()) throw Error(ErrorCode::UnknownProblem, "empty problem name");
  const std::string& base = parts[0];
  auto dim_arg = [&](Index fallback) {
    if (parts.size() < 2) return fallback;
    return parse_dim(parts[1], name);
  };

  if (base == "rosenbrock" && parts.size() == 1) return rosenbrock_classic();
  if (base == "chained_rosenbrock" && parts.size() <= 2) {
    return rosenbrock(RosenbrockVariant::Chained, dim_arg(10));
  }
  if (base == "sphere" && parts.size() <= 2) return sphere(dim_arg(10));
  if (base == "spd_quadratic" && parts.size() == 4) {
    const Index n = parse_dim(parts[1], name);
    double cond = 0.0;
    std::uint64_t seed = 0;
    try {
      cond = std::stod(parts[2]);
      seed = std::stoull(parts[3]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::UnknownProblem, "bad parameters in problem name " + name);
    }
    Problem p = random_spd_quadratic(n, cond, seed);
    p.name = name;
    return p;
  }
  if (base == "diagonal_quadratic" && parts.size() <= 2) {
    const Index n = dim_arg(100);
    Vector diag(n);
    for (Index i = 0; i < n; ++i) diag(i) = static_cast<double>(i + 1) / static_cast<double>(n);
    auto shared = std::make_shared<const Vector>(diag);
    Problem p;
    p.name = name;
    p.dim = n;
    p.x0 = Vector::Ones(n);
    p.value = [shared](const Vector& x) { return 0.5 * x.dot(shared->cwiseProduct(x)); };
    p.gradient = [shared](const Vector& x) -> Vector { return shared->cwiseProduct(x); };
    p.minimizer = Vector::Zero(n);
    p.optimal_value = 0.0;
    p.convex = true;
    return p;
  }
  if (base == "tridiagonal_quadratic" && parts.size() <= 2) {
    Problem p = tridiagonal_quadratic(dim_arg(100));
    p.name = name;
    return p;
  }
  if (base == "raydan1" && parts.size() <= 2) {
    const Index n = dim_arg(1000);
    const double scale = 10.0 / static_cast<double>(n);
    Problem p = separable(
        name, n, 1.0,
        [scale](Index i, double t) { return scale * static_cast<double>(i + 1) * (std::exp(t) - t); },
        [scale](Index i, double t) { return scale * static_cast<double>(i + 1) * (std::exp(t) - 1.0); },
        true);
    p.minimizer = Vector::Zero(n);
    return p;
  }
  if (base == "log_cosh" && parts.size() <= 2) {
    const Index n = dim_arg(500);
    Problem p = separable(
        name, n, 3.0,
        [](Index i, double t) {
          const double c = 1.0 + static_cast<double>(i % 10);
          const double u = t - 1.0;
          return c * (std::abs(u) + std::log1p(std::exp(-2.0 * std::abs(u))) - std::log(2.0));
        },
        [](Index i, double t) { return (1.0 + static_cast<double>(i % 10)) * std::tanh(t - 1.0); },
        true);
    p.minimizer = Vector::Ones(n);
    p.optimal_value = 0.0;
    return p;
  }
  if (base == "quartic" && parts.size() <= 2) {
    const Index n = dim_arg(2000);
    const double inv = 1.0 / static_cast<double>(n);
    Problem p = separable(
        name, n, 2.0,
        [inv](Index i, double t) {
          const double u = t - 1.0;
          return 0.25 * u * u * u * u + 0.5 * static_cast<double>(i + 1) * inv * u * u;
        },
        [inv](Index i, double t) {
          const double u = t - 1.0;
          return u * u * u + static_cast<double>(i + 1) * inv * u;
        },
        true);
    p.minimizer = Vector::Ones(n);
    p.optimal_value = 0.0;
    return p;
  }
  if (base == "extended_powell" && parts.size() <= 2) {
    const Index n = dim_arg(100);
    if (n % 4 != 0) throw Error(ErrorCode::UnknownProblem, "extended_powell needs n divisible by 4");
    Problem p = extended_powell(n);
    p.name = name;
    return p;
  }
  if (base == "engval1" && parts.size() <= 2) {
    const Index n = dim_arg(1000);
    if (n < 2) throw Error(ErrorCode::UnknownProblem, "engval1 needs n >= 2");
    Problem p = engval1(n);
    p.name = name;
    return p;
  }
  if (base == "trigonometric" && parts.size() <= 2) {
    // f = sum_i (n - sum_j cos x_j + i (1 - cos x_i) - sin x_i)^2, nonconvex.
    const Index n = dim_arg(200);
    Problem p;
    p.name = name;
    p.dim = n;
    p.x0 = Vector::Constant(n, 1.0 / (5.0 * static_cast<double>(n)));
    p.value = [](const Vector& x) {
      const double nn = static_cast<double>(x.size());
      const double cos_sum = x.array().cos().sum();
      double f = 0.0;
      for (Index i = 0; i < x.size(); ++i) {
        const double r = nn - cos_sum + static_cast<double>(i + 1) * (1.0 - std::cos(x(i))) -
                         std::sin(x(i));
        f += r * r;
      }
      return f;
    };
    p.gradient = [](const Vector& x) {
      const Index len = x.size();
      const double nn = static_cast<double>(len);
      const double cos_sum = x.array().cos().sum();
      Vector r(len);
      for (Index i = 0; i < len; ++i) {
        r(i) = nn - cos_sum + static_cast<double>(i + 1) * (1.0 - std::cos(x(i))) - std::sin(x(i));
      }
      const double r_sum = r.sum();
      Vector g(len);
      for (Index i = 0; i < len; ++i) {
        const double own = static_cast<double>(i + 1) * std::sin(x(i)) - std::cos(x(i));
        g(i) = 2.0 * (r_sum * std::sin(x(i)) + r(i) * own);
      }
      return g;
    };
    return p;
  }
  throw Error(ErrorCode::UnknownProblem, "unknown problem " + name);
}

}  // namespace aggbfgs
