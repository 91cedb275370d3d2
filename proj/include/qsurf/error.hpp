#pragma once

#include <stdexcept>
#include <string>

namespace qsurf {

//! Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! Unsupported combination of settings (grid scheme, memory cap, ...).
class ConfigurationError : public Error
{
public:
  using Error::Error;
};

//! Argument outside the mathematical domain of an operation (alpha, level, ...).
class DomainError : public Error
{
public:
  using Error::Error;
};

//! Malformed input document or data file.
class ParseError : public Error
{
public:
  using Error::Error;
};

class DimensionError : public Error
{
public:
  using Error::Error;
};

//! The model cannot answer the query analytically (e.g. spiral oracles).
class CapabilityError : public Error
{
public:
  using Error::Error;
};

class EstimationError : public Error
{
public:
  using Error::Error;
};

class NumericalError : public Error
{
public:
  using Error::Error;
};

//! No band of the requested width fits in any admissible range.
class NoAdmissibleBand : public DomainError
{
public:
  using DomainError::DomainError;
};

//! The session is held by a running job and cannot be replaced.
class SessionBusy : public Error
{
public:
  using Error::Error;
};

//! Short machine-readable tag for an exception ("domain", "parse", ...).
inline const char*
error_kind(const std::exception& e)
{
  if (dynamic_cast<const NoAdmissibleBand*>(&e))
    return "no-admissible-band";
  if (dynamic_cast<const DomainError*>(&e))
    return "domain";
  if (dynamic_cast<const ParseError*>(&e))
    return "parse";
  if (dynamic_cast<const DimensionError*>(&e))
    return "dimension";
  if (dynamic_cast<const ConfigurationError*>(&e))
    return "configuration";
  if (dynamic_cast<const CapabilityError*>(&e))
    return "capability";
  if (dynamic_cast<const EstimationError*>(&e))
    return "estimation";
  if (dynamic_cast<const NumericalError*>(&e))
    return "numerical";
  if (dynamic_cast<const SessionBusy*>(&e))
    return "busy";
  return "internal";
}

} // namespace qsurf
