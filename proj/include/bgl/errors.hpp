#pragma once

#include <stdexcept>
#include <string>

namespace bgl {

enum class Errc {
  OutOfRangeParent,
  EmptyType,
  SizeMismatch,
  TypeIndexOutOfRange,
  ParseError,
  ShapeMismatch,
  NonFiniteScore,
  LabelOutOfRange,
  InstanceTooLarge,
  NonFiniteLoss,
  InvalidSpec,
  DivergedLoss,
  IoError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& msg);

}  // namespace bgl
