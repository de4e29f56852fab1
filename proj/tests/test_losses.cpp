#include <doctest.h>

#include <cmath>
#include <numeric>

#include "snl/error.hpp"
#include "snl/gradients.hpp"
#include "snl/losses.hpp"
#include "support.hpp"

using namespace snl;
using snl::test::gaussian;
using snl::test::rel_diff;

namespace {

// Anchor 0 with the given (squared) distances to its positives and negatives,
// realised on a line.
struct Line {
  Matrix x;
  std::vector<SupportNeighborhood> hood;
};

Line single_anchor(const std::vector<double>& pos, const std::vector<double>& neg) {
  Line l;
  l.x = Matrix::Zero(static_cast<Eigen::Index>(1 + pos.size() + neg.size()), 1);
  SupportNeighborhood n;
  std::size_t row = 1;
  for (double d : pos) {
    l.x(static_cast<Eigen::Index>(row), 0) = std::sqrt(d);
    n.knn.push_back(row);
    n.positives.push_back(row++);
  }
  for (double d : neg) {
    l.x(static_cast<Eigen::Index>(row), 0) = -std::sqrt(d);
    n.knn.push_back(row);
    n.negatives.push_back(row++);
  }
  l.hood.push_back(n);
  // the other rows take no part: empty neighbourhoods are skipped
  for (std::size_t r = 1; r < row; ++r) l.hood.push_back({r, {}, {}, {}});
  return l;
}

double separation_oracle(const Matrix& x, const std::vector<SupportNeighborhood>& hoods, double sigma) {
  double sum = 0;
  std::size_t active = 0;
  for (const auto& n : hoods) {
    if (n.positives.empty()) continue;
    ++active;
    long double sp = 0, sn = 0;
    for (auto p : n.positives) sp += std::exp(-(long double)sigma * squared_distance(x, n.anchor, p));
    for (auto q : n.negatives) sn += std::exp(-(long double)sigma * squared_distance(x, n.anchor, q));
    sum += static_cast<double>(-std::log(sp / (sp + sn)));
  }
  return active ? sum / active : 0.0;
}

double batch_all_oracle(const Matrix& x, const std::vector<int>& y, double margin) {
  double sum = 0;
  std::size_t count = 0;
  const auto m = y.size();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t n = 0; n < m; ++n) {
        if (p == i || y[p] != y[i] || y[n] == y[i]) continue;
        const double dp = (x.row(i) - x.row(p)).squaredNorm();
        const double dn = (x.row(i) - x.row(n)).squaredNorm();
        sum += std::max(dp - dn + margin, 0.0);
        ++count;
      }
  return sum / static_cast<double>(count);
}

}  // namespace

TEST_CASE("separation hand values") {
  for (double sigma : {0.5, 1.0, 30.0}) {
    const auto l = single_anchor({2.0}, {2.0});
    CHECK(separation_loss(l.x, l.hood, sigma).mean == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  const auto l = single_anchor({0.0}, {1.0});
  CHECK(separation_loss(l.x, l.hood, 1.0).mean == doctest::Approx(0.313261687518223).epsilon(1e-12));
  const auto none = single_anchor({1.0, 2.0}, {});
  CHECK(separation_loss(none.x, none.hood, 5.0).mean == 0.0);
}

TEST_CASE("skipped anchors") {
  const auto l = single_anchor({}, {1.0, 2.0});
  const auto r = separation_loss(l.x, l.hood, 1.0);
  CHECK(r.skipped_count == 3);
  CHECK(r.skipped[0]);
  CHECK(r.mean == 0.0);
  CHECK(squeeze_loss(l.x, l.hood).skipped_count == 3);
}

TEST_CASE("squeeze hand values") {
  auto l = single_anchor({1.0, 4.0, 2.5}, {0.5});
  CHECK(squeeze_loss(l.x, l.hood).mean == doctest::Approx(3.0).epsilon(1e-12));
  l = single_anchor({1.7}, {0.5});
  CHECK(squeeze_loss(l.x, l.hood).mean == 0.0);
  l = single_anchor({2.0, 2.0}, {});
  CHECK(squeeze_loss(l.x, l.hood).mean == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("sn_loss combination") {
  // positive at D=0 at the anchor sets min = 0, another at D=3 sets max = 3
  Matrix x(4, 1);
  x << 0, 0, std::sqrt(3.0), -1;
  std::vector<SupportNeighborhood> hood{{0, {1, 3, 2}, {1, 2}, {3}}, {1, {}, {}, {}}, {2, {}, {}, {}}, {3, {}, {}, {}}};
  const SNConfig cfg{1.0, 0.1, 3};
  const auto r = sn_loss(x, hood, cfg);
  const double sep = -std::log((1.0 + std::exp(-3.0)) / (1.0 + std::exp(-3.0) + std::exp(-1.0)));
  CHECK(r.separation == doctest::Approx(sep).epsilon(1e-12));
  CHECK(r.squeeze == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.total == doctest::Approx(sep + 0.3).epsilon(1e-12));

  // the single-anchor example: separation 0.313262, squeeze 3 -> 0.613262
  Matrix y(4, 1);
  y << 0, 0, std::sqrt(3.0), -1;
  const std::vector<SupportNeighborhood> one_anchor{{0, {1, 3}, {1}, {3}}, {1, {}, {}, {}}, {2, {}, {}, {}}, {3, {}, {}, {}}};
  const auto s = sn_loss(y, one_anchor, SNConfig{1.0, 0.1, 2});
  CHECK(s.total == doctest::Approx(0.313261687518223).epsilon(1e-12));

  Rng rng(3);
  const Matrix b = gaussian(rng, 12, 4);
  const auto labels = snl::test::pk_labels(3, 4);
  const auto zero = sn_loss(b, labels, SNConfig{5.0, 0.0, 6});
  CHECK(zero.total == zero.separation);
  const auto full = sn_loss(b, labels, SNConfig{5.0, 0.7, 6});
  CHECK(full.total == doctest::Approx(full.separation + 0.7 * full.squeeze).epsilon(1e-12));

  const std::vector<int> one(12, 3);
  const auto single = sn_loss(b, one, SNConfig{5.0, 0.2, 6});
  CHECK(single.separation == 0.0);
  CHECK(single.total == doctest::Approx(0.2 * single.squeeze).epsilon(1e-12));
}

TEST_CASE("SN config validation") {
  CHECK_THROWS_AS((SNConfig{0.0, 0.1, 4}.validate()), ValidationError);
  CHECK_THROWS_AS((SNConfig{1.0, -0.1, 4}.validate()), ValidationError);
  CHECK_THROWS_AS((SNConfig{1.0, 0.1, 0}.validate()), ValidationError);
  Rng rng(0);
  CHECK_THROWS_AS(sn_loss(gaussian(rng, 4, 2), std::vector<int>{0, 0, 1, 1}, SNConfig{1, 0, 4}), ValidationError);
}

TEST_CASE("separation forms agree and match a direct oracle") {
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    const Matrix x = gaussian(rng, 16, 8, 0.5);
    const auto labels = snl::test::pk_labels(4, 4);
    for (double sigma : {0.5, 5.0, 30.0}) {
      const auto hood = support_neighbors(pairwise_sq_distances(x), labels, 7);
      const double a = separation_loss(x, hood, sigma, SeparationForm::neighborhood_sum).mean;
      const double b = separation_loss(x, hood, sigma, SeparationForm::split_sum).mean;
      CHECK(rel_diff(a, b) <= 1e-12);
      CHECK(rel_diff(b, separation_oracle(x, hood, sigma)) <= 1e-12);
    }
  }
}

TEST_CASE("loss invariants on random batches") {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto batch = tie_free_batch(rng, 16, 8, 4);
    const SNConfig cfg{5.0, 0.1, 7};
    const auto base = sn_loss(batch.embeddings, batch.labels, cfg);
    for (const auto& a : base.per_anchor) {
      CHECK(a.separation >= 0.0);
      CHECK(a.squeeze >= 0.0);
    }

    Matrix shifted = batch.embeddings;
    shifted.rowwise() += gaussian(rng, 1, 8, 3.0).row(0);
    CHECK(rel_diff(sn_loss(shifted, batch.labels, cfg).total, base.total) <= 1e-9);
    CHECK(rel_diff(triplet_batch_hard(shifted, batch.labels, 0.3), triplet_batch_hard(batch.embeddings, batch.labels, 0.3)) <= 1e-9);
    CHECK(rel_diff(triplet_batch_all(shifted, batch.labels, 0.3), triplet_batch_all(batch.embeddings, batch.labels, 0.3)) <= 1e-9);

    std::vector<std::size_t> perm(16);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> plabels(16);
    for (std::size_t i = 0; i < 16; ++i) plabels[i] = batch.labels[perm[i]];
    const Matrix permuted = snl::test::permute_rows(batch.embeddings, perm);
    CHECK(rel_diff(sn_loss(permuted, plabels, cfg).total, base.total) <= 1e-12);
    CHECK(rel_diff(triplet_batch_all(permuted, plabels, 0.3), triplet_batch_all(batch.embeddings, batch.labels, 0.3)) <= 1e-12);
  }
}

TEST_CASE("separation decreases with sigma when the positive is closer") {
  const auto l = single_anchor({0.5}, {1.5});
  double prev = INFINITY;
  for (double sigma : {1.0, 10.0, 30.0, 60.0}) {
    const double v = separation_loss(l.x, l.hood, sigma).mean;
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev > 0.0);
}

TEST_CASE("large sigma stays finite") {
  const auto l = single_anchor({40.0}, {50.0});
  const double v = separation_loss(l.x, l.hood, 60.0).mean;
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(std::log1p(std::exp(-600.0))).epsilon(1e-12));
  const auto far = single_anchor({50.0}, {40.0});
  CHECK(separation_loss(far.x, far.hood, 60.0).mean == doctest::Approx(600.0).epsilon(1e-12));
}

TEST_CASE("softmax loss") {
  Rng rng(1);
  const Matrix x = gaussian(rng, 7, 3);
  const std::vector<int> y{0, 1, 2, 3, 4, 5, 9};
  CHECK(softmax_loss(x, y, Matrix::Zero(10, 3), Vector::Zero(10)) == std::log(10.0));

  Matrix one(1, 2);
  one << 1, 0;
  Matrix w(2, 2);
  w << 10, 0, 0, 0;
  CHECK(softmax_loss(one, std::vector<int>{0}, w, Vector::Zero(2)) ==
        doctest::Approx(-std::log(std::exp(10.0) / (std::exp(10.0) + 1.0))).epsilon(1e-9));

  const Matrix wr = gaussian(rng, 10, 3);
  const Vector br = gaussian(rng, 10, 1).col(0);
  std::vector<std::size_t> perm{6, 5, 4, 3, 2, 1, 0};
  std::vector<int> py;
  for (auto i : perm) py.push_back(y[i]);
  CHECK(rel_diff(softmax_loss(snl::test::permute_rows(x, perm), py, wr, br), softmax_loss(x, y, wr, br)) <= 1e-12);

  CHECK_THROWS_AS(softmax_loss(x, std::vector<int>{0, 1, 2, 3, 4, 5, 10}, wr, br), LabelError);
  CHECK_THROWS_AS(softmax_loss(x, std::vector<int>{0, 1, 2, 3, 4, 5, -1}, wr, br), LabelError);
  CHECK_THROWS_AS(softmax_loss(x, y, Matrix::Zero(10, 2), br), ShapeError);
}

TEST_CASE("triplet batch hard hand values") {
  const double r2 = std::sqrt(2.0);
  Matrix a(4, 2);
  a << 0, 0, 1, 0, 0, r2, 1, r2;
  const std::vector<int> y{0, 0, 1, 1};
  CHECK(triplet_batch_hard(a, y, 0.3) == 0.0);
  Matrix b(4, 2);
  b << 0, 0, r2, 0, 0, 1, r2, 1;
  CHECK(triplet_batch_hard(b, y, 0.3) == doctest::Approx(1.3).epsilon(1e-12));

  Matrix sep(4, 1);
  sep << 0, 0.1, 5, 5.1;
  CHECK(triplet_batch_hard(sep, y, 0.0) == 0.0);
}

TEST_CASE("triplet contract errors") {
  Matrix x = Matrix::Zero(3, 2);
  x(1, 0) = 1;
  x(2, 1) = 1;
  CHECK_THROWS_AS(triplet_batch_hard(x, std::vector<int>{0, 0, 1}, 0.3), ContractError);
  CHECK_THROWS_AS(triplet_batch_all(x, std::vector<int>{0, 0, 0}, 0.3), ContractError);
}

TEST_CASE("batch all against exhaustive enumeration") {
  Rng rng(12);
  std::uniform_int_distribution<std::size_t> pick_p(2, 4);
  for (int t = 0; t < 300; ++t) {
    const std::size_t p = pick_p(rng);
    const std::size_t q = std::max<std::size_t>(2, 8 / p);
    const auto y = snl::test::pk_labels(p, std::min<std::size_t>(q, 8 / p));
    const Matrix x = gaussian(rng, y.size(), 3);
    CHECK(rel_diff(triplet_batch_all(x, y, 0.5), batch_all_oracle(x, y, 0.5)) <= 1e-12);
  }
  // 2 identities x 2 samples: 8 triplets, each anchor has one positive and one negative pairing per negative
  Matrix x(4, 1);
  x << 0, 1, 3, 7;
  const std::vector<int> y{0, 0, 1, 1};
  CHECK(triplet_batch_all(x, y, 0.2) == doctest::Approx(batch_all_oracle(x, y, 0.2)).epsilon(1e-14));
}

TEST_CASE("batch hard dominates batch all") {
  // each anchor's hardest hinge is at least the mean of its hinges
  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    const Matrix x = gaussian(rng, 8, 2);
    const auto y = snl::test::pk_labels(2, 4);
    CHECK(triplet_batch_hard(x, y, 0.3) >= triplet_batch_all(x, y, 0.3) - 1e-12);
  }
}
