#pragma once

#include <stdexcept>
#include <string>

namespace wtt {

enum class ErrorKind { InvalidArgument, Config, Io, Protocol, State };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Configuration error carrying the dotted path of the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& msg)
      : Error(ErrorKind::Config, path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace wtt
