#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semrank {

/// Base of every error raised for bad input data or violated preconditions.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DuplicateDocumentError : public Error {
  public:
    explicit DuplicateDocumentError(std::string id)
        : Error("duplicate document id: " + id), id_(std::move(id)) {}
    const std::string& id() const { return id_; }

  private:
    std::string id_;
};

/// Malformed serialized input; carries the byte offset where parsing stopped.
class ParseError : public Error {
  public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

}  // namespace semrank
