#include <doctest.h>

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "balasso/dataset.hpp"
#include "balasso/error.hpp"
#include "balasso/groups.hpp"
#include "balasso/keyvalue.hpp"
#include "helpers.hpp"

using namespace balasso;
using namespace balasso::testing;

TEST_SUITE("support") {

TEST_CASE("key-value text round trip keeps order, skips comments and trims") {
  const KeyValues kv{{"scenario", "ex1"}, {"n", "120"}, {"mode.r", "0.1"}, {"empty", ""}};
  const std::string text = format_key_values(kv);
  CHECK(text == "scenario = ex1\nn = 120\nmode.r = 0.1\nempty = \n");
  CHECK(parse_key_values(text) == kv);

  const KeyValues parsed = parse_key_values("# header\n\n  a =  1 \r\nb=x=y\n");
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0] == std::pair<std::string, std::string>{"a", "1"});
  CHECK(parsed[1].second == "x=y");
  REQUIRE(find_value(parsed, "b") != nullptr);
  CHECK(find_value(parsed, "c") == nullptr);
  CHECK_THROWS_AS(parse_key_values("a = 1\nno equals sign\n"), std::invalid_argument);
}

TEST_CASE("format_double is the shortest exact round trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-300) == "-2.5e-300");
  RngHandle rng(31);
  for (int i = 0; i < 20000; ++i) {
    const double x = std::ldexp(rng.normal(), static_cast<int>(rng.uniform() * 200.0) - 100);
    REQUIRE(parse_double(format_double(x)) == x);
  }
  for (double x : {std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max(),
                   std::numeric_limits<double>::epsilon(), 1.0 / 3.0, -0.0})
    CHECK(std::bit_cast<std::uint64_t>(parse_double(format_double(x))) == std::bit_cast<std::uint64_t>(x));
  CHECK(parse_double(" 7.5 ") == 7.5);
  CHECK_THROWS_AS(parse_double("1.5x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_double(""), std::invalid_argument);
}

TEST_CASE("FNV-1a reproduces the reference 64-bit vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
  CHECK(hash_key_values({{"a", "1"}}) == fnv1a("a = 1\n"));
  CHECK(hash_key_values({{"a", "1"}}) != hash_key_values({{"a", "2"}}));
}

TEST_CASE("hex encoding is fixed width and reversible") {
  CHECK(to_hex(0) == "0000000000000000");
  CHECK(to_hex(0xdeadbeefULL) == "00000000deadbeef");
  CHECK(from_hex(to_hex(0xfedcba9876543210ULL)) == 0xfedcba9876543210ULL);
  CHECK_THROWS_AS(from_hex("12g4"), std::invalid_argument);
}

TEST_CASE("group maps must partition the columns") {
  CHECK_NOTHROW(validate_partition({{0, 1}, {2}, {3, 4}}, 5));
  CHECK_NOTHROW(validate_partition(singleton_groups(4), 4));
  CHECK_THROWS_AS(validate_partition({{0, 1}, {1, 2}}, 3), ParameterDomainError);
  CHECK_THROWS_AS(validate_partition({{0, 1}}, 3), ParameterDomainError);
  CHECK_THROWS_AS(validate_partition({{0}, {}}, 1), ParameterDomainError);
  CHECK_THROWS_AS(validate_partition({{0, 5}}, 2), ParameterDomainError);
}

TEST_CASE("ancestry relations must be acyclic and in range") {
  CHECK_NOTHROW(validate_ancestry({{0, 2}, {1, 2}, {2, 3}}, 4));
  CHECK_THROWS_AS(validate_ancestry({{0, 1}, {1, 2}, {2, 0}}, 3), ParameterDomainError);
  CHECK_THROWS_AS(validate_ancestry({{1, 1}}, 2), ParameterDomainError);
  CHECK_THROWS_AS(validate_ancestry({{0, 4}}, 2), ParameterDomainError);
}

TEST_CASE("dataset fingerprint reacts to any value and to centering") {
  RngHandle rng(8);
  const Dataset a = make_dataset(gaussian_matrix(10, 2, rng), gaussian_vector(10, rng));
  Dataset b = a;
  CHECK(dataset_fingerprint(a) == dataset_fingerprint(b));
  b.X(9, 1) = std::nextafter(b.X(9, 1), 1e9);
  CHECK(dataset_fingerprint(a) != dataset_fingerprint(b));
  CHECK(dataset_fingerprint(a) != dataset_fingerprint(standardize(a, Standardization::center)));
  CHECK_THROWS_AS(make_dataset(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(4)), ParameterDomainError);
}

}  // TEST_SUITE
