#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "test_util.hpp"
#include "voxbench/design.hpp"

using namespace voxbench;

namespace {

// Plain union-find over the 25 cells; deliberately shares nothing with validate().
bool union_find_valid(const MaterialMatrix& m) {
  std::array<int, kCellCount> parent;
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int filled = 0;
  bool actuator = false;
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      const int code = m.code(r, c);
      if (code == 0) continue;
      ++filled;
      actuator |= code == 3 || code == 4;
      if (r + 1 < kGridSize && m.code(r + 1, c) != 0) parent[find(r * 5 + c)] = find((r + 1) * 5 + c);
      if (c + 1 < kGridSize && m.code(r, c + 1) != 0) parent[find(r * 5 + c)] = find(r * 5 + c + 1);
    }
  }
  std::set<int> roots;
  for (int i = 0; i < kCellCount; ++i) {
    if (m.cells()[i] != Material::Empty) roots.insert(find(i));
  }
  return filled > 0 && roots.size() == 1 && actuator;
}

MaterialMatrix uniform_matrix(Rng& rng) {
  MaterialMatrix m;
  for (auto& c : m.cells()) c = static_cast<Material>(rng.below(5));
  return m;
}

int changed_cells(const MaterialMatrix& a, const MaterialMatrix& b) {
  int n = 0;
  for (int i = 0; i < kCellCount; ++i) n += a.cells()[i] != b.cells()[i];
  return n;
}

}  // namespace

TEST_CASE("validate examples") {
  MaterialMatrix single;
  single.set(0, 0, Material::Soft);
  auto r = validate(single);
  CHECK(r.connected);
  CHECK(r.nonempty);
  CHECK_FALSE(r.has_actuator);
  CHECK_FALSE(r.valid);

  MaterialMatrix diag;
  diag.set(0, 0, Material::HorizontalActuator);
  diag.set(1, 1, Material::HorizontalActuator);
  CHECK_FALSE(validate(diag).connected);

  auto full = validate(MaterialMatrix::filled(Material::HorizontalActuator));
  CHECK(full.connected);
  CHECK(full.has_actuator);
  CHECK(full.valid);

  auto empty = validate(MaterialMatrix{});
  CHECK_FALSE(empty.nonempty);
  CHECK_FALSE(empty.valid);
}

TEST_CASE("validate agrees with union-find on random matrices") {
  Rng rng(2024);
  int discrepancies = 0;
  for (int i = 0; i < 10'000; ++i) {
    const MaterialMatrix m = uniform_matrix(rng);
    discrepancies += validate(m).valid != union_find_valid(m);
  }
  CHECK(discrepancies == 0);
}

TEST_CASE("RobotDesign rejects empty and disconnected matrices and lists actuators row-major") {
  CHECK_THROWS_AS(RobotDesign{MaterialMatrix{}}, InvalidDesign);
  MaterialMatrix diag;
  diag.set(0, 0, Material::Soft);
  diag.set(1, 1, Material::Soft);
  CHECK_THROWS_AS(RobotDesign{diag}, InvalidDesign);

  const RobotDesign d(testutil::grid("0 4 0 0 0\n0 2 3 0 0\n0 3 4 0 0\n0 0 0 0 0\n0 0 0 0 0\n"));
  REQUIRE(d.actuators().size() == 4);
  CHECK(d.actuators()[0] == ActuatorCell{0, 1, ActuatorAxis::Vertical});
  CHECK(d.actuators()[1] == ActuatorCell{1, 2, ActuatorAxis::Horizontal});
  CHECK(d.actuators()[2] == ActuatorCell{2, 1, ActuatorAxis::Horizontal});
  CHECK(d.actuators()[3] == ActuatorCell{2, 2, ActuatorAxis::Vertical});
}

TEST_CASE("random_design is deterministic and valid") {
  Rng a(7);
  Rng b(7);
  CHECK(random_design(a) == random_design(b));
  Rng rng(99);
  for (int i = 0; i < 500; ++i) CHECK(validate(random_design(rng).matrix()).valid);
}

TEST_CASE("fraction of valid uniform matrices matches the reference estimate") {
  // Reference: 10^6 uniform matrices labelled with scipy (tests/oracles/goldens.py).
  constexpr double kReference = 0.724282;
  constexpr double kReferenceSd = 0.000447;
  constexpr int n = 100'000;
  Rng rng(31337);
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += validate(uniform_matrix(rng)).valid;
  const double p = static_cast<double>(hits) / n;
  const double sd = std::sqrt(kReference * (1 - kReference) / n + kReferenceSd * kReferenceSd);
  CHECK(std::abs(p - kReference) < 3 * sd);
}

TEST_CASE("random_design gives up after the retry cap") {
  Rng rng(1);
  CHECK_THROWS_AS(random_design(rng, 0), SamplingFailure);
}

TEST_CASE("mutate") {
  Rng rng(5);
  const RobotDesign base = random_design(rng);

  SUBCASE("rate 0 is the identity") {
    for (int i = 0; i < 100; ++i) CHECK(mutate(base, 0.0, rng) == base);
  }
  SUBCASE("outputs are valid") {
    for (int i = 0; i < 1000; ++i) CHECK(validate(mutate(base, 0.3, rng).matrix()).valid);
  }
  SUBCASE("rate outside [0, 1] is rejected") {
    CHECK_THROWS_AS(mutate(base, 1.5, rng), ConfigError);
    CHECK_THROWS_AS(mutate(base, -0.1, rng), ConfigError);
  }
  SUBCASE("mean changed cells at rate 0.1 is 25 * 0.1 * 4/5") {
    const RobotDesign full(MaterialMatrix::filled(Material::HorizontalActuator));
    constexpr int n = 100'000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const int k = changed_cells(full.matrix(), mutate(full, 0.1, rng).matrix());
      sum += k;
      sq += static_cast<double>(k) * k;
    }
    const double mean = sum / n;
    const double sd = std::sqrt((sq / n - mean * mean) / n);
    CHECK(std::abs(mean - 2.0) < 3 * sd);
  }
}

TEST_CASE("actuator_count") {
  CHECK(actuator_count(testutil::grid("3 3 3 4 4\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n")) == 5);
  CHECK(actuator_count(MaterialMatrix::filled(Material::Rigid)) == 0);
  CHECK(actuator_count(MaterialMatrix::filled(Material::VerticalActuator)) == 25);
  CHECK(voxel_count(testutil::grid("3 0 3 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 1\n")) == 3);
}

TEST_CASE("design_hash") {
  // FNV-1a 64 of 25 bytes of value 2, from tests/oracles/goldens.py.
  CHECK(design_hash(MaterialMatrix::filled(Material::Soft)) == 0x552506313e2c9d45ULL);
  CHECK(design_hash(MaterialMatrix{}) == 0xd4657f55662f817fULL);

  Rng rng(11);
  const MaterialMatrix base = random_design(rng).matrix();
  CHECK(design_hash(base) == design_hash(MaterialMatrix(base)));
  std::set<std::uint64_t> hashes{design_hash(base)};
  for (int i = 0; i < kCellCount; ++i) {
    for (int code = 0; code < kMaterialCount; ++code) {
      if (code == static_cast<int>(base.cells()[i])) continue;
      MaterialMatrix edit = base;
      edit.cells()[i] = static_cast<Material>(code);
      hashes.insert(design_hash(edit));
    }
  }
  CHECK(hashes.size() == 1 + 25 * 4);
}

TEST_CASE("parse_matrix") {
  SUBCASE("five lines of digits") {
    const auto m = parse_matrix("3 3 3 3 3\n2 2 2 2 2\n1 1 1 1 1\n4 4 4 4 4\n0 0 0 0 0\n");
    CHECK(m.code(0, 0) == 3);
    CHECK(m.code(3, 4) == 4);
    CHECK(m.code(4, 2) == 0);
  }
  SUBCASE("prose with comma separated rows") {
    const auto m = parse_matrix(
        "Here is my robot:\n1, 2, 3, 4, 0\n1,1,1,1,1\n0,0,3,0,0\n2,2,2,2,2\n4,4,4,4,4\nGood luck!");
    CHECK(m.code(0, 3) == 4);
    CHECK(m.code(2, 2) == 3);
  }
  SUBCASE("bracketed array embedded in prose") {
    const auto m = parse_matrix(
        "The answer is [[1,1,1,1,1],[2,2,2,2,2],[3,3,3,3,3],[4,4,4,4,4],[0,0,0,0,1]] overall.");
    CHECK(m.code(4, 4) == 1);
    CHECK(m.code(2, 0) == 3);
  }
  SUBCASE("first well-formed occurrence wins") {
    const auto m = parse_matrix(
        "[[3,3,3,3,3],[0,0,0,0,0],[0,0,0,0,0],[0,0,0,0,0],[0,0,0,0,0]]\n"
        "1 1 1 1 1\n1 1 1 1 1\n1 1 1 1 1\n1 1 1 1 1\n1 1 1 1 1\n");
    CHECK(m.code(0, 0) == 3);
    const auto later = parse_matrix("1 1 1\n2 2 2\n\n4 4 4 4 4\n4 4 4 4 4\n4 4 4 4 4\n4 4 4 4 4\n4 4 4 4 4\n");
    CHECK(later.code(0, 0) == 4);
  }
  SUBCASE("four rows is BadDimensions") {
    const std::string text = "1 1 1 1 1\n1 1 1 1 1\n1 1 1 1 1\n1 1 1 1 1\n";
    try {
      parse_matrix(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseErrorKind::BadDimensions);
      CHECK(e.span().begin == 0);
      CHECK(e.span().end == text.size() - 1);
    }
  }
  SUBCASE("digit 7 is BadCode with its span") {
    const std::string text = "1 1 1 1 1\n1 1 7 1 1\n1 1 1 1 1\n1 1 1 1 1\n1 1 1 1 1\n";
    try {
      parse_matrix(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseErrorKind::BadCode);
      CHECK(text.substr(e.span().begin, e.span().end - e.span().begin) == "7");
    }
  }
  SUBCASE("no matrix at all") {
    try {
      parse_matrix("I would build a robot with long legs.");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseErrorKind::NoMatrixFound);
    }
  }
  SUBCASE("canonical text round-trips") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
      const MaterialMatrix m = uniform_matrix(rng);
      CHECK(parse_matrix(render_matrix(m)) == m);
    }
    CHECK(render_matrix(MaterialMatrix::filled(Material::Soft)) ==
          "2 2 2 2 2\n2 2 2 2 2\n2 2 2 2 2\n2 2 2 2 2\n2 2 2 2 2\n");
  }
}

TEST_CASE("mirrored flips columns") {
  const auto m = testutil::grid("1 2 3 4 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n");
  CHECK(render_matrix(m.mirrored()).substr(0, 10) == "0 4 3 2 1\n");
  CHECK(m.mirrored().mirrored() == m);
}
