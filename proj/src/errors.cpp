#include "bgl/errors.hpp"

namespace bgl {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::OutOfRangeParent: return "OutOfRangeParent";
    case Errc::EmptyType: return "EmptyType";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::TypeIndexOutOfRange: return "TypeIndexOutOfRange";
    case Errc::ParseError: return "ParseError";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonFiniteScore: return "NonFiniteScore";
    case Errc::LabelOutOfRange: return "LabelOutOfRange";
    case Errc::InstanceTooLarge: return "InstanceTooLarge";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::DivergedLoss: return "DivergedLoss";
    case Errc::IoError: return "IoError";
  }
  return "UnknownError";
}

void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace bgl
