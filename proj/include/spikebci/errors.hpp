#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spikebci {

// Malformed input file content. Carries the file, 1-based line and the field
// that failed to parse.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, std::size_t line, std::string field, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": field '" + field + "': " + what),
        file_(std::move(file)),
        line_(line),
        field_(std::move(field)) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::string file_;
  std::size_t line_;
  std::string field_;
};

// Out-of-range or invalid argument values (counts, thresholds, fractions).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Structurally inconsistent data (duplicate ids, mismatched channel counts).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Index ranges that fall outside the data they refer to.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A cluster cannot host a 3-channel kernel window.
class TopologyError : public ValidationError {
 public:
  TopologyError(std::size_t cluster, const std::string& what)
      : ValidationError("cluster " + std::to_string(cluster) + ": " + what), cluster_(cluster) {}
  std::size_t cluster() const { return cluster_; }

 private:
  std::size_t cluster_;
};

class EncodingError : public std::runtime_error {
 public:
  EncodingError(std::size_t channel, std::size_t timestep, const std::string& what)
      : std::runtime_error("channel " + std::to_string(channel) + ", timestep " +
                           std::to_string(timestep) + ": " + what),
        channel_(channel),
        timestep_(timestep) {}
  std::size_t channel() const { return channel_; }
  std::size_t timestep() const { return timestep_; }

 private:
  std::size_t channel_;
  std::size_t timestep_;
};

// A caller broke a documented precondition of an internal operation.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace spikebci

namespace spikebci {

// Wraps a failure while processing one sample; the cause is nested.
class SampleError : public std::runtime_error {
 public:
  SampleError(std::string sample_id, const std::string& what)
      : std::runtime_error("sample " + sample_id + ": " + what), sample_id_(std::move(sample_id)) {}
  const std::string& sample_id() const { return sample_id_; }

 private:
  std::string sample_id_;
};

}  // namespace spikebci
