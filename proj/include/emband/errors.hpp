#pragma once

#include <stdexcept>
#include <string>

namespace emband {

// Base class for all library errors. The category steers the CLI exit code:
// usage errors exit 2, data errors 3, numerical failures 4.
class Error : public std::runtime_error {
 public:
  enum class Category { Usage, Data, Numerical };

  Error(Category category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  Category category() const { return category_; }

 private:
  Category category_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& m) : Error(Category::Usage, m) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& m) : Error(Category::Data, m) {}
};

// Partition and group-spec validation.
struct OverlapError : DataError { using DataError::DataError; };
struct GapError : DataError { using DataError::DataError; };
struct UnknownFeatureError : DataError { using DataError::DataError; };
struct DuplicateFeatureError : DataError { using DataError::DataError; };
struct EmptyGroupError : DataError { using DataError::DataError; };
struct MissingSourceTagError : DataError { using DataError::DataError; };
struct ParseError : DataError { using DataError::DataError; };

// Dataset ingestion.
struct FormatError : DataError { using DataError::DataError; };
struct JoinError : DataError { using DataError::DataError; };
struct LabelDomainError : DataError { using DataError::DataError; };

// Shape and value contracts.
struct DimensionMismatch : DataError { using DataError::DataError; };
struct DegenerateError : DataError { using DataError::DataError; };
struct MismatchedGroupsError : DataError { using DataError::DataError; };
struct EmptyInputError : DataError { using DataError::DataError; };

// Generator and CLI argument validation.
struct InvalidJError : UsageError { using UsageError::UsageError; };
struct InvalidSpecError : UsageError { using UsageError::UsageError; };

// Linear-algebra failures (factorization breakdown after the jitter retry).
struct NumericalError : Error {
  explicit NumericalError(const std::string& m) : Error(Category::Numerical, m) {}
};

}  // namespace emband
