#include "lowscat/linforce.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace lowscat {

WeightedGridFunction::WeightedGridFunction(std::vector<double> grid, int dim, double s_)
    : t(std::move(grid)), values(Mat::Zero(dim, static_cast<Eigen::Index>(t.size()))), s(s_) {}

double WeightedGridFunction::weighted_norm() const {
    const int n = size();
    if (n < 2) return 0.0;
    double acc = 0.0;
    for (int k = 0; k + 1 < n; ++k) {
        const double h = std::log(t[k + 1] / t[k]);
        const double a = values.col(k).squaredNorm() * std::pow(t[k], 1.0 - 2.0 * s);
        const double b = values.col(k + 1).squaredNorm() * std::pow(t[k + 1], 1.0 - 2.0 * s);
        acc += 0.5 * h * (a + b);
    }
    return std::sqrt(acc);
}

double WeightedGridFunction::max_norm() const {
    double m = 0.0;
    for (int k = 0; k < size(); ++k) m = std::max(m, values.col(k).norm());
    return m;
}

CoefficientPath CoefficientPath::sample(const std::function<Mat(double)>& qfun,
                                        const std::vector<double>& grid, double epsilon_bar) {
    CoefficientPath p;
    p.t = grid;
    p.epsilon_bar = epsilon_bar;
    p.q.reserve(grid.size());
    for (double t : grid) p.q.push_back(qfun(t));
    return p;
}

double hardy_margin(const CoefficientPath& qpath) {
    double m = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < qpath.t.size(); ++k) {
        const double lmin =
            Eigen::SelfAdjointEigenSolver<Mat>(qpath.q[k], Eigen::EigenvaluesOnly).eigenvalues()(0);
        const double w = qpath.t[k] - 1.0;
        m = std::min(m, w * w * lmin);
    }
    const double e = qpath.epsilon_bar;
    return m + 0.25 * (1.0 - e * e);
}

namespace {

double uniform_step(const std::vector<double>& t) {
    if (t.size() < 4 || t.front() != 1.0) throw DomainError("linforce: grid must start at 1 with >= 4 nodes");
    const int n = static_cast<int>(t.size()) - 1;
    const double h = std::log(t.back()) / n;
    for (int k = 1; k <= n; ++k)
        if (std::abs(std::log(t[k]) - k * h) > 1e-9 * std::max(1.0, k * h))
            throw DomainError("linforce: grid is not uniform in ln t");
    return h;
}

}  // namespace

DecayingSolver::DecayingSolver(const CoefficientPath& qpath, const DecayingOptions& opt)
    : t_(qpath.t), d_(qpath.dim()), eps_bar_(qpath.epsilon_bar) {
    if (opt.check_hardy) {
        const double m = hardy_margin(qpath);
        if (m < 0.0)
            throw HardyViolation("solve_decaying: Hardy margin " + std::to_string(m) + " < 0");
    }
    h_ = uniform_step(t_);
    n_ = static_cast<int>(t_.size()) - 1;
    const int d = d_, n = n_;
    const double h = h_, c12 = h * h / 12.0;
    const Mat I = Mat::Identity(d, d);
    Q_.resize(n + 1);
    for (int k = 0; k <= n; ++k) Q_[k] = 0.25 * I + t_[k] * t_[k] * qpath.q[k];

    // recessive closure at τ_N from the frozen coefficient Q_N
    Eigen::SelfAdjointEigenSolver<Mat> es(Q_[n]);
    if (es.eigenvalues()(0) <= 0.0)
        throw HardyViolation("solve_decaying: coefficient not positive at T_max");
    k_ = es.eigenvalues().cwiseSqrt();
    K_ = es.eigenvectors() * k_.asDiagonal() * es.eigenvectors().transpose();

    A_.resize(n + 1);
    Binv_.resize(n + 1);
    Cp_.resize(n + 1);
    for (int j = 1; j <= n; ++j) {
        Mat B, C;
        if (j < n) {
            A_[j] = I - c12 * Q_[j - 1];
            B = -2.0 * I - 10.0 * c12 * Q_[j];
            C = I - c12 * Q_[j + 1];
        } else {
            A_[j] = -I / h + (h / 6.0) * Q_[n - 1];
            B = I / h + (h / 3.0) * Q_[n] + K_;
            C = Mat::Zero(d, d);
        }
        if (j > 1) B -= A_[j] * Cp_[j - 1];
        Eigen::PartialPivLU<Mat> lu(B);
        Binv_[j] = lu.inverse();
        Cp_[j] = lu.solve(C);
    }
}

DecayingSolution DecayingSolver::solve(const WeightedGridFunction& rhs, double s) const {
    if (rhs.t.size() != t_.size() || rhs.dim() != d_)
        throw DomainError("solve_decaying: grid or dimension mismatch");
    if (!(s < 1.0 + 0.5 * eps_bar_)) throw DomainError("solve_decaying: need s < 1 + eps_bar/2");
    const int d = d_, n = n_;
    const double h = h_, h2 = h * h, c12 = h2 / 12.0;
    const Mat I = Mat::Identity(d, d);
    Mat S(d, n + 1);
    for (int k = 0; k <= n; ++k) S.col(k) = std::pow(t_[k], 1.5) * rhs.values.col(k);

    double sigma = 0.0;
    Vec p = Vec::Zero(d);
    const double sN = S.col(n).norm(), sM = S.col(n - 1).norm();
    if (sN > 1e-300 && sM > 1e-300) {
        sigma = std::log(sN / sM) / h;
        if (sigma >= k_.minCoeff() - 1e-3)
            throw DomainError("solve_decaying: forcing grows too fast at T_max (rate " +
                              std::to_string(sigma) + ")");
        p = (sigma * sigma * I - Q_[n]).partialPivLu().solve(S.col(n));
    }

    Mat rp(d, n + 1);
    Vec r(d), tmp(d);
    for (int j = 1; j <= n; ++j) {
        if (j < n) {
            r = c12 * (S.col(j - 1) + 10.0 * S.col(j) + S.col(j + 1));
        } else {
            r.noalias() = sigma * p + K_ * p;
            r -= (h / 3.0) * S.col(n) + (h / 6.0) * S.col(n - 1);
        }
        if (j > 1) r.noalias() -= A_[j] * rp.col(j - 1);
        rp.col(j).noalias() = Binv_[j] * r;
    }
    Mat u = Mat::Zero(d, n + 1);
    u.col(n) = rp.col(n);
    for (int j = n - 1; j >= 1; --j) {
        tmp.noalias() = Cp_[j] * u.col(j + 1);
        u.col(j) = rp.col(j) - tmp;
    }

    // u'' and u' (fourth order where the stencil allows)
    Mat upp(d, n + 1);
    Mat Qu(d, n + 1);
    for (int j = 0; j <= n; ++j) Qu.col(j).noalias() = Q_[j] * u.col(j);
    upp = Qu + S;
    Mat up(d, n + 1);
    up.col(0) = (u.col(1) - u.col(0)) / h - (h / 6.0) * (2.0 * upp.col(0) + upp.col(1)) +
                (h / 24.0) * (upp.col(0) - 2.0 * upp.col(1) + upp.col(2));
    for (int j = 1; j < n; ++j)
        up.col(j) = (u.col(j + 1) - u.col(j - 1)) / (2.0 * h) -
                    (h / 12.0) * (upp.col(j + 1) - upp.col(j - 1));
    up.col(n) = (u.col(n) - u.col(n - 1)) / h + (h / 6.0) * (2.0 * upp.col(n) + upp.col(n - 1)) -
                (h / 24.0) * (upp.col(n) - 2.0 * upp.col(n - 1) + upp.col(n - 2));

    DecayingSolution sol;
    sol.z = WeightedGridFunction(t_, d, s);
    sol.zdot.resize(d, n + 1);
    for (int j = 0; j <= n; ++j) {
        const double rt = std::sqrt(t_[j]);
        sol.z.values.col(j) = rt * u.col(j);
        sol.zdot.col(j) = (up.col(j) + 0.5 * u.col(j)) / rt;
    }

    // residual of the Numerov rows, scaled like u'' - Qu - S
    double res = 0.0, smax = 0.0;
    for (int j = 1; j < n; ++j) {
        r = (u.col(j - 1) - 2.0 * u.col(j) + u.col(j + 1)) -
            c12 * (upp.col(j - 1) + 10.0 * upp.col(j) + upp.col(j + 1));
        res = std::max(res, r.norm() / h2);
        smax = std::max(smax, upp.col(j).norm() + S.col(j).norm() + Qu.col(j).norm());
    }
    sol.residual = smax > 0.0 ? res / smax : res;
    sol.boundary_rate = sigma;
    return sol;
}

DecayingSolution solve_decaying(const CoefficientPath& qpath, const WeightedGridFunction& rhs,
                                double s, const DecayingOptions& opt) {
    if (qpath.t.size() != rhs.t.size() || qpath.dim() != rhs.dim())
        throw DomainError("solve_decaying: grid or dimension mismatch");
    if (!(s < 1.0 + 0.5 * qpath.epsilon_bar))
        throw DomainError("solve_decaying: need s < 1 + eps_bar/2");
    return DecayingSolver(qpath, opt).solve(rhs, s);
}

WeightedGridFunction growing_homogeneous(const CoefficientPath& qpath, double s) {
    const double h = uniform_step(qpath.t);
    const int n = static_cast<int>(qpath.t.size()) - 1;
    const int d = qpath.dim();
    const Mat I = Mat::Identity(d, d);
    const double c12 = h * h / 12.0;
    std::vector<Mat> Q(n + 1);
    for (int k = 0; k <= n; ++k) Q[k] = 0.25 * I + qpath.t[k] * qpath.t[k] * qpath.q[k];
    Mat u = Mat::Zero(d, n + 1);
    // u(h) = h e₀ + (h³/6) Q(0) e₀ + O(h⁴), from u'' = Q u, u(0) = 0, u'(0) = e₀
    u.col(1) = h * Vec::Unit(d, 0) + (h * h * h / 6.0) * Q[0].col(0);
    for (int j = 1; j < n; ++j) {
        const Vec rhs = -(-2.0 * I - 10.0 * c12 * Q[j]) * u.col(j) - (I - c12 * Q[j - 1]) * u.col(j - 1);
        u.col(j + 1) = (I - c12 * Q[j + 1]).partialPivLu().solve(rhs);
    }
    WeightedGridFunction w(qpath.t, d, s);
    for (int j = 0; j <= n; ++j) w.values.col(j) = std::sqrt(qpath.t[j]) * u.col(j);
    return w;
}

RefinementReport refinement_study(const std::function<Mat(double)>& qfun,
                                  const std::function<Vec(double)>& ffun, int dim, double t_max,
                                  int n0, double s, double epsilon_bar) {
    RefinementReport rep;
    std::vector<WeightedGridFunction> sols;
    for (int lev = 0; lev < 3; ++lev) {
        const int n = n0 << lev;
        std::vector<double> grid(n + 1);
        const double h = std::log(t_max) / n;
        for (int k = 0; k <= n; ++k) grid[k] = std::exp(h * k);
        grid[0] = 1.0;
        CoefficientPath q = CoefficientPath::sample(qfun, grid, epsilon_bar);
        WeightedGridFunction f(grid, dim, s);
        for (int k = 0; k <= n; ++k) f.values.col(k) = ffun(grid[k]);
        sols.push_back(solve_decaying(q, f, s).z);
        rep.intervals.push_back(n);
    }
    for (int lev = 0; lev < 2; ++lev) {
        const auto& a = sols[lev];
        const auto& b = sols[lev + 1];
        double m = 0.0;
        for (int k = 0; k < a.size(); ++k) {
            if (a.t[k] > 0.5 * t_max) break;
            m = std::max(m, (a.values.col(k) - b.values.col(2 * k)).norm());
        }
        rep.differences.push_back(m);
    }
    const double e1 = rep.differences[0], e2 = rep.differences[1];
    rep.ratio = e1 > 0.0 ? e2 / e1 : 0.0;
    rep.order = (e1 > 0.0 && e2 > 0.0) ? std::log2(e1 / e2) : std::numeric_limits<double>::infinity();
    // below 1e-13 the differences are roundoff and say nothing about convergence
    if (rep.ratio > 0.5 && e1 > 1e-13)
        throw ConvergenceError("refinement_study: successive difference ratio " +
                               std::to_string(rep.ratio) + " > 0.5");
    return rep;
}

double resolvent_cross_check(const CoefficientPath& qpath, const WeightedGridFunction& rhs,
                             double s) {
    const DecayingSolution direct = solve_decaying(qpath, rhs, s);
    // z(ζ) = z₀ + a|ζ|^k + b|ζ| + ..., fitted through three shifts. The shift takes over
    // at t ~ |ζ|^{-1/2}, where the two branches t^{1/2 ± k} of the tail differ by ζ^k;
    // k = √λ_min(¼ + t²q) at T_max, so ½ when q decays faster than t^{-2}.
    const int n = static_cast<int>(qpath.t.size()) - 1;
    const Mat Qn = 0.25 * Mat::Identity(qpath.dim(), qpath.dim()) + qpath.t[n] * qpath.t[n] * qpath.q[n];
    const double k = std::sqrt(std::max(0.0, Eigen::SelfAdjointEigenSolver<Mat>(Qn).eigenvalues()(0)));
    std::vector<WeightedGridFunction> zs;
    Eigen::Matrix3d V;
    for (int i = 0; i < 3; ++i) {
        const double zeta = std::pow(10.0, -(6 + i));
        CoefficientPath shifted = qpath;
        for (Mat& q : shifted.q) q.diagonal().array() += zeta;
        zs.push_back(solve_decaying(shifted, rhs, s).z);
        V.row(i) << 1.0, std::pow(zeta, k), zeta;
    }
    const Eigen::RowVector3d w = V.inverse().row(0);
    double dev = 0.0, scale = 0.0;
    for (int j = 0; j < rhs.size(); ++j) {
        if (rhs.t[j] > 10.0) break;
        const Vec ext = w(0) * zs[0].values.col(j) + w(1) * zs[1].values.col(j) +
                        w(2) * zs[2].values.col(j);
        dev = std::max(dev, (ext - direct.z.values.col(j)).norm());
        scale = std::max(scale, direct.z.values.col(j).norm());
    }
    return scale > 0.0 ? dev / scale : dev;
}

}  // namespace lowscat
