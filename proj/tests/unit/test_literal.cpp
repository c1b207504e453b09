#include "doctest.h"
#include "opflow/literal.hpp"

using namespace opflow;

TEST_CASE("truthiness follows PHP coercion") {
  CHECK_FALSE(php_truthy(Literal::null()));
  CHECK_FALSE(php_truthy(Literal::integer(0)));
  CHECK_FALSE(php_truthy(Literal::str("")));
  CHECK_FALSE(php_truthy(Literal::str("0")));
  CHECK_FALSE(php_truthy(Literal::array({})));
  CHECK(php_truthy(Literal::str("00")));
  CHECK(php_truthy(Literal::str("false")));
  CHECK(php_truthy(Literal::integer(-1)));
  CHECK(php_truthy(Literal::real(0.1)));
}

TEST_CASE("string coercion") {
  CHECK(php_to_string(Literal::boolean(true)) == "1");
  CHECK(php_to_string(Literal::boolean(false)) == "");
  CHECK(php_to_string(Literal::null()) == "");
  CHECK(php_to_string(Literal::integer(-42)) == "-42");
  CHECK(php_to_string(Literal::real(1.0)) == "1");
  CHECK(php_to_string(Literal::real(1.5)) == "1.5");
}

TEST_CASE("loose equality") {
  CHECK(php_loose_equal(Literal::str("10"), Literal::integer(10)));
  CHECK(php_loose_equal(Literal::str("1e2"), Literal::str("100")));
  CHECK_FALSE(php_loose_equal(Literal::str("abc"), Literal::integer(0)));  // PHP 8
  CHECK(php_loose_equal(Literal::boolean(true), Literal::integer(7)));
  CHECK(php_loose_equal(Literal::null(), Literal::str("")));
  CHECK_FALSE(php_loose_equal(Literal::str("abc"), Literal::str("abd")));
  CHECK_FALSE(php_identical(Literal::str("10"), Literal::integer(10)));
  CHECK(php_identical(Literal::integer(10), Literal::integer(10)));
}

TEST_CASE("numeric strings and intval") {
  CHECK(php_is_numeric_string("12"));
  CHECK(php_is_numeric_string(" 12 "));
  CHECK(php_is_numeric_string("-1.5e3"));
  CHECK_FALSE(php_is_numeric_string("12abc"));
  CHECK_FALSE(php_is_numeric_string(""));
  CHECK(php_intval(Literal::str("42abc")) == 42);
  CHECK(php_intval(Literal::str("abc")) == 0);
  CHECK(php_intval(Literal::real(3.9)) == 3);
}

TEST_CASE("array key normalization") {
  CHECK(php_normalize_key(Literal::str("5")) == ArrayKey{std::int64_t{5}});
  CHECK(php_normalize_key(Literal::str("05")) == ArrayKey{std::string("05")});
  CHECK(php_normalize_key(Literal::str("-3")) == ArrayKey{std::int64_t{-3}});
  CHECK(php_normalize_key(Literal::boolean(true)) == ArrayKey{std::int64_t{1}});
  CHECK(php_normalize_key(Literal::null()) == ArrayKey{std::string("")});
  CHECK(php_normalize_key(Literal::real(1.9)) == ArrayKey{std::int64_t{1}});
}
