#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "spdopt/matrix.hpp"
#include "test_util.hpp"

using namespace spdopt;

namespace {

DenseMatrix scalar(double x) {
  DenseMatrix m(1, 1);
  m(0, 0) = x;
  return m;
}

DenseMatrix dense2(double a, double b, double c, double d) {
  DenseMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

// Independent reference exponential: Taylor series on a halved argument,
// squared back up. Slow but trustworthy for the Pade cross-checks.
DenseMatrix series_exp(const DenseMatrix& n) {
  int s = 0;
  double nrm = n.cwiseAbs().colwise().sum().maxCoeff();
  while (nrm > 0.05) {
    nrm /= 2.0;
    ++s;
  }
  const DenseMatrix a = n / std::ldexp(1.0, s);
  DenseMatrix term = DenseMatrix::Identity(n.rows(), n.cols());
  DenseMatrix sum = term;
  for (int j = 1; j <= 30; ++j) {
    term = DenseMatrix(term * a / j);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = DenseMatrix(sum * sum);
  return sum;
}

}  // namespace

TEST_CASE("symmetrization on construction is bitwise") {
  std::mt19937_64 rng(11);
  const DenseMatrix raw = testutil::rand_dense(rng, 5, 5);
  const SymmetricMatrix s(raw);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) {
      CHECK(s(i, j) == s(j, i));  // exact, not approximate
      CHECK(s(i, j) == doctest::Approx(0.5 * (raw(i, j) + raw(j, i))));
    }
}

TEST_CASE("symmetric matrix rejects bad input") {
  CHECK_THROWS_AS(SymmetricMatrix(DenseMatrix::Zero(2, 3)),
                  std::invalid_argument);
  DenseMatrix bad = DenseMatrix::Zero(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(SymmetricMatrix{bad}, std::invalid_argument);
}

TEST_CASE("lower triangular projects the upper half to zero") {
  std::mt19937_64 rng(12);
  const LowerTriangular l(testutil::rand_dense(rng, 4, 4));
  for (Eigen::Index j = 1; j < 4; ++j)
    for (Eigen::Index i = 0; i < j; ++i) CHECK(l(i, j) == 0.0);
}

TEST_CASE("matrix exponential: scalar and diagonal cases") {
  CHECK(mat_exp(scalar(std::log(2.0)), TruncationMode::exact)(0, 0) ==
        doctest::Approx(2.0).epsilon(1e-12));

  const DenseMatrix d = dense2(0.1, 0.0, 0.0, 0.1);
  const DenseMatrix lin = mat_exp(d, TruncationMode::linear);
  CHECK(lin(0, 0) == doctest::Approx(1.1));
  CHECK(lin(1, 1) == doctest::Approx(1.1));
  CHECK(lin(0, 1) == 0.0);

  CHECK(mat_exp(scalar(0.693147), TruncationMode::quadratic)(0, 0) ==
        doctest::Approx(1.933374).epsilon(1e-6));
}

TEST_CASE("matrix exponential of zero is the identity, exactly") {
  for (auto mode : {TruncationMode::exact, TruncationMode::linear,
                    TruncationMode::quadratic}) {
    const DenseMatrix e = mat_exp(DenseMatrix::Zero(3, 3), mode);
    CHECK(e == DenseMatrix::Identity(3, 3));
  }
}

TEST_CASE("quadratic truncation stays within the cubic remainder") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    SymmetricMatrix n = testutil::rand_sym(rng, 4, 0.02);
    if (n.norm() > 0.1) n = (0.09 / n.norm()) * n;
    const DenseMatrix q = mat_exp(n.mat(), TruncationMode::quadratic);
    const DenseMatrix e = mat_exp(n.mat(), TruncationMode::exact);
    const double nn = n.norm();
    CHECK((q - e).norm() <= nn * nn * nn);
  }
}

TEST_CASE("quadratic truncation of a symmetric argument is an SPD Gram form") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const SymmetricMatrix n = testutil::rand_sym(rng, 5, 1.5);
    const DenseMatrix q = mat_exp(n.mat(), TruncationMode::quadratic);
    const DenseMatrix id = DenseMatrix::Identity(5, 5);
    const DenseMatrix gram = 0.5 * (id + (id + n.mat()) *
                                             (id + n.mat()).transpose());
    CHECK((q - gram).norm() < 1e-13 * std::max(1.0, gram.norm()));
    CHECK(min_eig(SymmetricMatrix(q)) > 0.0);
  }
}

TEST_CASE("Pade path agrees with an independent series evaluation") {
  // Nilpotent: exp([[0,1],[0,0]]) = [[1,1],[0,1]] with no truncation error.
  const DenseMatrix nil = mat_exp(dense2(0.0, 1.0, 0.0, 0.0),
                                  TruncationMode::exact);
  CHECK(nil(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(nil(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(nil(1, 0) == 0.0);

  // Rotation generator integrates to cosine/sine.
  const double th = 1.234;
  const DenseMatrix rot = mat_exp(dense2(0.0, -th, th, 0.0),
                                  TruncationMode::exact);
  CHECK(rot(0, 0) == doctest::Approx(std::cos(th)).epsilon(1e-13));
  CHECK(rot(1, 0) == doctest::Approx(std::sin(th)).epsilon(1e-13));

  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    DenseMatrix n = testutil::rand_dense(rng, 4, 4, 0.8);
    n(0, 1) += 0.5;  // keep it clearly non-symmetric
    const DenseMatrix got = mat_exp(n, TruncationMode::exact);
    const DenseMatrix want = series_exp(n);
    CHECK((got - want).norm() < 1e-12 * want.norm());
  }
}

TEST_CASE("exponential of a lower-triangular matrix is lower triangular, bitwise") {
  std::mt19937_64 rng(16);
  for (auto mode : {TruncationMode::exact, TruncationMode::quadratic,
                    TruncationMode::linear}) {
    const LowerTriangular l = testutil::rand_lower(rng, 5, 1.2);
    const DenseMatrix e = mat_exp(l.mat(), mode);
    for (Eigen::Index j = 1; j < 5; ++j)
      for (Eigen::Index i = 0; i < j; ++i) CHECK(e(i, j) == 0.0);
  }
}

TEST_CASE("symmetric square root: frozen cases and residuals") {
  const SymmetricMatrix d49(dense2(4.0, 0.0, 0.0, 9.0));
  const SymmetricMatrix r = sym_sqrt(d49);
  CHECK(r(0, 0) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(r(1, 1) == doctest::Approx(3.0).epsilon(1e-13));

  const SymmetricMatrix id = SymmetricMatrix::Identity(3);
  CHECK((sym_sqrt(id).mat() - id.mat()).norm() < 1e-14);

  std::mt19937_64 rng(17);
  const SymmetricMatrix s = testutil::rand_spd(rng, 4, 50.0);
  const SymmetricMatrix p = sym_sqrt(s);
  CHECK((p.mat() * p.mat() - s.mat()).norm() / s.norm() < 1e-12);
}

TEST_CASE("symmetric square root rejects indefinite input with the eigenvalue") {
  const SymmetricMatrix indef(dense2(1.0, 0.0, 0.0, -2.0));
  CHECK_THROWS_WITH_AS(sym_sqrt(indef),
                       doctest::Contains("-2"), std::domain_error);
}

TEST_CASE("SPD logarithm: frozen cases and round trips") {
  const double e1 = std::exp(1.0);
  const SymmetricMatrix s(dense2(e1, 0.0, 0.0, e1 * e1));
  const SymmetricMatrix l = mat_log_spd(s);
  CHECK(l(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(l(1, 1) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(mat_log_spd(SymmetricMatrix::Identity(3)).norm() < 1e-14);

  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 10; ++trial) {
    SymmetricMatrix x = testutil::rand_sym(rng, 4, 0.3);
    if (x.norm() > 1.0) x = (1.0 / x.norm()) * x;
    const SymmetricMatrix back =
        mat_log_spd(SymmetricMatrix(mat_exp(x.mat(), TruncationMode::exact)));
    CHECK((back.mat() - x.mat()).norm() < 1e-10);
  }
}

TEST_CASE("cholesky: frozen 2x2, residuals, and breakdown") {
  const LowerTriangular l0 = cholesky(SymmetricMatrix(dense2(4, 0, 0, 9)));
  CHECK(l0(0, 0) == doctest::Approx(2.0));
  CHECK(l0(1, 1) == doctest::Approx(3.0));

  const LowerTriangular l1 = cholesky(SymmetricMatrix(dense2(4, 2, 2, 2)));
  CHECK(l1(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(l1(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(l1(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(l1(0, 1) == 0.0);

  std::mt19937_64 rng(19);
  const SymmetricMatrix s = testutil::rand_spd(rng, 6, 100.0);
  const LowerTriangular l = cholesky(s);
  CHECK((l.mat() * l.mat().transpose() - s.mat()).norm() <
        1e-12 * s.norm());

  CHECK_THROWS_AS(cholesky(SymmetricMatrix(dense2(1, 3, 3, 1))),
                  std::domain_error);
}

TEST_CASE("round trips hold across dimensions and conditioning") {
  std::mt19937_64 rng(20);
  for (Eigen::Index k : {1, 2, 3, 5, 8, 13, 16}) {
    const SymmetricMatrix s = testutil::rand_spd(rng, k, 1e6);
    const SymmetricMatrix p = sym_sqrt(s);
    CHECK((p.mat() * p.mat() - s.mat()).norm() / s.norm() < 1e-10);

    const LowerTriangular l = cholesky(s);
    CHECK((l.mat() * l.mat().transpose() - s.mat()).norm() / s.norm() <
          1e-10);

    const SymmetricMatrix lg = mat_log_spd(s);
    const DenseMatrix back = mat_exp(lg.mat(), TruncationMode::exact);
    CHECK((back - s.mat()).norm() / s.norm() < 1e-10);
  }
}

TEST_CASE("kron_apply matches the dense Kronecker product") {
  // Identity and scalar sanity first.
  std::mt19937_64 rng(21);
  const DenseMatrix x0 = testutil::rand_dense(rng, 3, 2);
  CHECK((kron_apply(DenseMatrix::Identity(2, 2), DenseMatrix::Identity(3, 3),
                    x0) -
         x0).norm() == 0.0);
  CHECK(kron_apply(scalar(2.0), scalar(3.0), scalar(1.0))(0, 0) ==
        doctest::Approx(6.0));

  for (Eigen::Index p = 1; p <= 4; ++p) {
    for (Eigen::Index d = 1; d <= 4; ++d) {
      const DenseMatrix k = testutil::rand_dense(rng, p, p);
      const DenseMatrix c = testutil::rand_dense(rng, d, d);
      const DenseMatrix x = testutil::rand_dense(rng, d, p);

      // Dense oracle: build K (x) C explicitly and apply it to vec(X),
      // column-major stacking.
      DenseMatrix kron(p * d, p * d);
      for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
          kron.block(i * d, j * d, d, d) = k(i, j) * c;
      Eigen::VectorXd vec_x(Eigen::Map<const Eigen::VectorXd>(x.data(),
                                                              d * p));
      const Eigen::VectorXd vec_y = kron * vec_x;
      const DenseMatrix want =
          Eigen::Map<const DenseMatrix>(vec_y.data(), d, p);

      const DenseMatrix got = kron_apply(k, c, x);
      CHECK((got - want).cwiseAbs().maxCoeff() < 1e-13);
    }
  }

  CHECK_THROWS_AS(kron_apply(DenseMatrix::Zero(2, 2), DenseMatrix::Zero(3, 3),
                             DenseMatrix::Zero(2, 3)),
                  std::invalid_argument);
}

TEST_CASE("smallest eigenvalue queries") {
  CHECK(min_eig(SymmetricMatrix(dense2(1, 0, 0, 5))) == doctest::Approx(1.0));
  CHECK(min_eig(SymmetricMatrix::Identity(4)) == doctest::Approx(1.0));
  CHECK(min_eig(SymmetricMatrix(dense2(2, 1, 1, 2))) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(is_spd(SymmetricMatrix(dense2(2, 1, 1, 2))));
  CHECK_FALSE(is_spd(SymmetricMatrix(dense2(1, 3, 3, 1))));
}

TEST_CASE("triangular solves preserve triangular structure bitwise") {
  std::mt19937_64 rng(22);
  DenseMatrix lm = testutil::rand_dense(rng, 5, 5);
  lm.diagonal().array() += 4.0;
  const LowerTriangular l(lm);
  const LowerTriangular b = testutil::rand_lower(rng, 5);
  const DenseMatrix x = solve_lower(l, b.mat());
  for (Eigen::Index j = 1; j < 5; ++j)
    for (Eigen::Index i = 0; i < j; ++i) CHECK(x(i, j) == 0.0);
  CHECK((l.mat() * x - b.mat()).norm() < 1e-12);
}

TEST_CASE("SPD inverse via factored solves") {
  std::mt19937_64 rng(23);
  const SymmetricMatrix s = testutil::rand_spd(rng, 5, 30.0);
  const SymmetricMatrix si = inverse_spd(s);
  CHECK((s.mat() * si.mat() - DenseMatrix::Identity(5, 5)).norm() < 1e-11);
}

TEST_CASE("solver audit counts factorizations but not products") {
  std::mt19937_64 rng(24);
  const SymmetricMatrix s = testutil::rand_spd(rng, 4);
  const DenseMatrix k = testutil::rand_dense(rng, 3, 3);
  const DenseMatrix c = testutil::rand_dense(rng, 2, 2);
  const DenseMatrix x = testutil::rand_dense(rng, 2, 3);

  {
    audit::Probe probe;
    (void)cholesky(s);
    CHECK(probe.delta() == 1);
  }
  {
    audit::Probe probe;
    (void)kron_apply(k, c, x);
    (void)mat_exp(s.mat(), TruncationMode::linear);
    (void)mat_exp(s.mat(), TruncationMode::quadratic);
    CHECK(probe.delta() == 0);
  }
  {
    // The exact path factorizes (eigendecomposition), and honestly says so.
    audit::Probe probe;
    (void)mat_exp(s.mat(), TruncationMode::exact);
    CHECK(probe.delta() > 0);
  }
}
