#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "stokes_qopr/assembly.hpp"

namespace stokes_qopr {

enum class SolverKind { Direct, Schur };

struct StokesSolution {
    FeFunction velocity;
    FeFunction pressure;
    double multiplier = 0.0;  // enforces the zero pressure mean
    double residual = 0.0;    // relative algebraic residual of the block system
    int iterations = 0;       // inner iterations of the Schur path
};

namespace detail {

// [[mu A, B^T, 0], [B, 0, m], [0, m^T, 0]]
inline Eigen::SparseMatrix<double> block_system(const StokesSystem& s, double mu) {
    int nv = static_cast<int>(s.A.rows());
    int np = static_cast<int>(s.B.rows());
    int n = nv + np + 1;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(s.A.nonZeros() + 2 * s.B.nonZeros() + 2 * np);
    for (int k = 0; k < s.A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(s.A, k); it; ++it)
            trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                              mu * it.value());
    for (int k = 0; k < s.B.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(s.B, k); it; ++it) {
            int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
            trip.emplace_back(nv + r, c, it.value());
            trip.emplace_back(c, nv + r, it.value());
        }
    for (int k = 0; k < np; ++k) {
        trip.emplace_back(nv + k, nv + np, s.mean[k]);
        trip.emplace_back(nv + np, nv + k, s.mean[k]);
    }
    Eigen::SparseMatrix<double> K(n, n);
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

inline Eigen::VectorXd block_rhs(const StokesSystem& s) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s.F.size() + s.G.size() + 1);
    rhs.head(s.F.size()) = s.F;
    rhs.segment(s.F.size(), s.G.size()) = -s.G;
    return rhs;
}

}  // namespace detail

// Relative residual of a candidate solution (velocity, pressure, multiplier).
inline double residual_norm(const StokesSystem& sys, double mu, const Eigen::VectorXd& x) {
    Eigen::SparseMatrix<double> K = detail::block_system(sys, mu);
    Eigen::VectorXd rhs = detail::block_rhs(sys);
    return (K * x - rhs).norm() / std::max(1.0, rhs.norm());
}

inline StokesSolution solve(const StokesSystem& sys, double mu = 1.0,
                            SolverKind kind = SolverKind::Direct, double tol = 1e-10,
                            int max_iter = 5000) {
    if (sys.velocity == nullptr || sys.pressure == nullptr)
        throw std::invalid_argument("system is missing its spaces");
    if (!(mu > 0)) throw std::invalid_argument("viscosity must be positive");
    int nv = static_cast<int>(sys.A.rows());
    int np = static_cast<int>(sys.B.rows());
    Eigen::VectorXd x(nv + np + 1);
    int iterations = 0;

    if (kind == SolverKind::Direct) {
        Eigen::SparseMatrix<double> K = detail::block_system(sys, mu);
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(K);
        if (lu.info() != Eigen::Success) throw std::runtime_error("block factorization failed");
        x = lu.solve(detail::block_rhs(sys));
    } else {
        // pressure Schur complement, CG on the mean-free subspace with the
        // diagonal of the pressure mass as preconditioner
        Eigen::SparseMatrix<double> Amu = mu * sys.A;
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> alu(Amu);
        if (alu.info() != Eigen::Success)
            throw std::runtime_error("velocity factorization failed");
        Eigen::SparseMatrix<double> Bt = sys.B.transpose();
        double volume = sys.mean.sum();
        Eigen::VectorXd mdiag = assemble_pressure_mass(*sys.pressure).diagonal();

        auto project = [np](Eigen::VectorXd& r) { r.array() -= r.sum() / np; };
        auto apply_schur = [&](const Eigen::VectorXd& q) -> Eigen::VectorXd {
            return sys.B * alu.solve(Bt * q);
        };

        // the multiplier is fixed by summing the pressure equations; folding
        // it into the right side puts the system in the range of the Schur
        // complement, the projection then only sweeps up roundoff
        Eigen::VectorXd rhs = sys.B * alu.solve(sys.F) + sys.G;
        double lambda = -rhs.sum() / volume;
        rhs += lambda * sys.mean;
        project(rhs);
        double rhs_norm = std::max(rhs.norm(), 1e-300);

        Eigen::VectorXd p = Eigen::VectorXd::Zero(np);
        Eigen::VectorXd r = rhs;
        Eigen::VectorXd z = r.cwiseQuotient(mdiag);
        project(z);
        Eigen::VectorXd q = z;
        double rz = r.dot(z);
        while (r.norm() > tol * rhs_norm) {
            if (iterations++ >= max_iter) throw std::runtime_error("pressure solver stalled");
            Eigen::VectorXd v = apply_schur(q);
            double alpha = rz / q.dot(v);
            p += alpha * q;
            r -= alpha * v;
            project(r);
            z = r.cwiseQuotient(mdiag);
            project(z);
            double rz_next = r.dot(z);
            q = z + (rz_next / rz) * q;
            rz = rz_next;
        }
        p.array() -= sys.mean.dot(p) / volume;
        x.head(nv) = alu.solve(sys.F - Bt * p);
        x.segment(nv, np) = p;
        x[nv + np] = lambda;
    }

    StokesSolution out;
    out.velocity = FeFunction(*sys.velocity, x.head(nv));
    out.pressure = FeFunction(*sys.pressure, x.segment(nv, np));
    out.multiplier = x[nv + np];
    out.residual = residual_norm(sys, mu, x);
    out.iterations = iterations;
    return out;
}

// Smallest nonconstant generalized eigenvalue of the pressure Schur
// complement against the pressure mass, reported viscosity-free. Dense linear
// algebra; meant for modest mesh sizes.
inline double infsup_probe(const StokesSystem& sys, double mu = 1.0) {
    int np = static_cast<int>(sys.B.rows());
    if (np < 2) throw std::invalid_argument("need at least two pressure unknowns");
    Eigen::MatrixXd A = mu * Eigen::MatrixXd(sys.A);
    Eigen::MatrixXd Bt = Eigen::MatrixXd(sys.B).transpose();
    Eigen::LLT<Eigen::MatrixXd> allt(A);
    if (allt.info() != Eigen::Success) throw std::runtime_error("velocity block not positive");
    Eigen::MatrixXd S = Bt.transpose() * allt.solve(Bt);
    Eigen::MatrixXd Mp = Eigen::MatrixXd(assemble_pressure_mass(*sys.pressure));
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Mp);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigenvalue solve failed");
    // eigenvalues ascend; the first belongs to the constant pressure mode
    double lam = eig.eigenvalues()[1];
    return std::sqrt(std::max(lam, 0.0) * mu);
}

}  // namespace stokes_qopr
