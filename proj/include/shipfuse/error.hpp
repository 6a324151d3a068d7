#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace shipfuse
{

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error
{
public:
  using Error::Error;
};

class FormatError : public Error
{
public:
  using Error::Error;
};

class ChecksumError : public Error
{
public:
  ChecksumError(unsigned computed, unsigned stated);
  unsigned computed;
  unsigned stated;
};

class ArmorError : public Error
{
public:
  ArmorError(std::size_t offset, char c);
  std::size_t offset;
};

class LengthError : public Error
{
public:
  using Error::Error;
};

class Unsupported : public Error
{
public:
  using Error::Error;
};

class OutOfDomain : public Error
{
public:
  using Error::Error;
};

class SingularTransform : public Error
{
public:
  using Error::Error;
};

class GeoMismatch : public Error
{
public:
  using Error::Error;
};

class DecodeError : public Error
{
public:
  using Error::Error;
};

class MissingGeoRef : public Error
{
public:
  using Error::Error;
};

class OffImage : public Error
{
public:
  using Error::Error;
};

class RleError : public Error
{
public:
  using Error::Error;
};

class EmptyMask : public Error
{
public:
  EmptyMask() : Error("mask has no set pixels") {}
};

class ExternalTimeout : public Error
{
public:
  using Error::Error;
};

class ProtocolError : public Error
{
public:
  using Error::Error;
};

/// Carries every dangling reference found, not just the first.
class IntegrityError : public Error
{
public:
  using Error::Error;
  explicit IntegrityError(std::vector<std::string> problems)
    : Error(join(problems)), problems_(std::move(problems))
  {
  }
  const std::vector<std::string> & problems() const { return problems_; }

private:
  static std::string join(const std::vector<std::string> & v)
  {
    std::string s = "integrity check failed";
    for (const auto & p : v) {
      s += "\n  " + p;
    }
    return s;
  }
  std::vector<std::string> problems_;
};

class IoError : public Error
{
public:
  using Error::Error;
};

}  // namespace shipfuse
