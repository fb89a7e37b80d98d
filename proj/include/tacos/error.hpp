#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace tacos {

enum class Errc {
  // action validation
  UnknownAction,
  UnknownUav,
  ArityMismatch,
  OutOfBoundsTarget,
  GoalInObstacle,
  // execution feedback
  InvalidPhaseTransition,
  InfeasibleStep,
  // LLM output handling
  ParseFailure,
  MissingReasoning,
  MissingPlan,
  MalformedCall,
  ValidationFailure,
  CycleBudgetExceeded,
  Cancelled,
  // backends
  BackendUnreachable,
  BadResponse,
  NoRuleMatched,
  TokenLimitExceeded,
  // history / sessions / io
  OutOfOrderEntry,
  BusyWithPlan,
  NotFound,
  InvalidScenario,
  InvalidArgument,
};

std::string_view to_string(Errc code);

struct Error {
  Errc code;
  std::string message;

  std::string describe() const;
};

/// Exception carrying an Errc, used where an error must cross a call stack
/// that cannot reasonably thread a Result through (I/O, backends, parsing).
class TacosError : public std::runtime_error {
 public:
  TacosError(Errc code, const std::string& message);
  explicit TacosError(Error err) : TacosError(err.code, err.message) {}

  Errc code() const noexcept { return code_; }
  Error error() const { return {code_, detail_}; }

 private:
  Errc code_;
  std::string detail_;
};

/// Value-or-error for operations whose failures are ordinary feedback
/// (validation rejections, phase errors) rather than exceptional.
template <typename T>
class Result {
 public:
  Result(T value) : v_(std::move(value)) {}  // NOLINT(google-explicit-constructor)
  Result(Error err) : v_(std::move(err)) {}  // NOLINT(google-explicit-constructor)

  bool ok() const noexcept { return std::holds_alternative<T>(v_); }
  explicit operator bool() const noexcept { return ok(); }

  const T& value() const& {
    if (!ok()) throw TacosError(std::get<Error>(v_));
    return std::get<T>(v_);
  }
  T&& value() && {
    if (!ok()) throw TacosError(std::get<Error>(v_));
    return std::get<T>(std::move(v_));
  }
  const T& operator*() const& { return value(); }
  const T* operator->() const { return &value(); }

  const Error& error() const& { return std::get<Error>(v_); }

 private:
  std::variant<T, Error> v_;
};

}  // namespace tacos
