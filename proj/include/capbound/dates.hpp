#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace capbound {

// A calendar date stored as days since 1970-01-01. Integer storage keeps
// ordering and arithmetic exact, which the size-time model relies on.
struct Date {
  int days = 0;

  auto operator<=>(const Date&) const = default;
};

// Parses strict ISO-8601 "YYYY-MM-DD"; throws ValidationError on anything else
// (including impossible dates such as 2023-02-29).
Date parse_date(std::string_view iso);

std::string format_date(Date d);

int days_from_civil(int year, int month, int day);
void civil_from_days(int days, int& year, int& month, int& day);

}  // namespace capbound
