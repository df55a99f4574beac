#pragma once

#include <stdexcept>
#include <string>

namespace albi {

/// Base class for all library errors. Subclasses carry the typed reason a
/// precondition or contract was violated; callers catch the concrete type,
/// and kind() names it for diagnostics.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual const char* kind() const { return "Error"; }
};

// -- core --------------------------------------------------------------

class FractionOutOfRange : public Error {
public:
    explicit FractionOutOfRange(double f)
        : Error("train fraction must lie strictly in (0,1), got " + std::to_string(f)) {}
    const char* kind() const override { return "FractionOutOfRange"; }
};

class GroupTooSmall : public Error {
public:
    explicit GroupTooSmall(const std::string& msg) : Error(msg) {}
    const char* kind() const override { return "GroupTooSmall"; }
};

class UnknownGroup : public Error {
public:
    explicit UnknownGroup(int group)
        : Error("group " + std::to_string(group) + " not present") {}
    const char* kind() const override { return "UnknownGroup"; }
};

class InvalidDataset : public Error {
public:
    explicit InvalidDataset(const std::string& msg) : Error(msg) {}
    const char* kind() const override { return "InvalidDataset"; }
};

// -- learner -----------------------------------------------------------

class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
    const char* kind() const override { return "DimensionMismatch"; }
};

class NonFiniteFeature : public Error {
public:
    explicit NonFiniteFeature(const std::string& msg) : Error(msg) {}
    const char* kind() const override { return "NonFiniteFeature"; }
};

class EmptyTrainingSet : public Error {
public:
    EmptyTrainingSet() : Error("training set must contain at least one instance") {}
    const char* kind() const override { return "EmptyTrainingSet"; }
};

class OutOfRange : public Error {
public:
    explicit OutOfRange(const std::string& msg) : Error(msg) {}
    const char* kind() const override { return "OutOfRange"; }
};

// -- metrics -----------------------------------------------------------

class EmptyGroup : public Error {
public:
    explicit EmptyGroup(int group)
        : Error("group " + std::to_string(group) + " has no instances") {}
    const char* kind() const override { return "EmptyGroup"; }
};

class NoPositives : public Error {
public:
    explicit NoPositives(int group)
        : Error("group " + std::to_string(group) +
                " has no positive-label instances; TPR gap undefined"),
          group_(group) {}
    const char* kind() const override { return "NoPositives"; }
    int group() const { return group_; }

private:
    int group_;
};

class NoNegatives : public Error {
public:
    explicit NoNegatives(int group)
        : Error("group " + std::to_string(group) +
                " has no negative-label instances; FPR gap undefined"),
          group_(group) {}
    const char* kind() const override { return "NoNegatives"; }
    int group() const { return group_; }

private:
    int group_;
};

// -- bias --------------------------------------------------------------

class RateOrderViolated : public Error {
public:
    RateOrderViolated(double low, double ref)
        : Error("low-rate group already has the higher positive rate (" +
                std::to_string(low) + " > " + std::to_string(ref) + ")") {}
    const char* kind() const override { return "RateOrderViolated"; }
};

class InsufficientNegatives : public Error {
public:
    InsufficientNegatives(int wanted, int available)
        : Error("need " + std::to_string(wanted) + " negative instances to flip, have " +
                std::to_string(available)) {}
    const char* kind() const override { return "InsufficientNegatives"; }
};

class RateOutOfRange : public Error {
public:
    explicit RateOutOfRange(double r)
        : Error("flip rate must lie in [0,1], got " + std::to_string(r)) {}
    const char* kind() const override { return "RateOutOfRange"; }
};

class UnknownInstance : public Error {
public:
    explicit UnknownInstance(int id)
        : Error("annotation references instance " + std::to_string(id) +
                " which is not in the dataset") {}
    const char* kind() const override { return "UnknownInstance"; }
};

class UncoveredInstance : public Error {
public:
    explicit UncoveredInstance(int id)
        : Error("instance " + std::to_string(id) + " has no annotations") {}
    const char* kind() const override { return "UncoveredInstance"; }
};

// -- strategies --------------------------------------------------------

class MetricUndefined : public Error {
public:
    explicit MetricUndefined(const std::string& msg) : Error(msg) {}
    const char* kind() const override { return "MetricUndefined"; }
};

class PoolExhausted : public Error {
public:
    PoolExhausted(int batch, int available)
        : Error("batch of " + std::to_string(batch) + " requested but only " +
                std::to_string(available) + " unlabeled instances remain") {}
    const char* kind() const override { return "PoolExhausted"; }
};

// -- harness -----------------------------------------------------------

class ConfigInvalid : public Error {
public:
    explicit ConfigInvalid(const std::string& msg) : Error(msg) {}
    const char* kind() const override { return "ConfigInvalid"; }
};

class TooFewSamples : public Error {
public:
    explicit TooFewSamples(std::size_t n)
        : Error("confidence interval needs at least 2 samples, got " + std::to_string(n)) {}
    const char* kind() const override { return "TooFewSamples"; }
};

class TooFewPoints : public Error {
public:
    explicit TooFewPoints(std::size_t n)
        : Error("trend detection needs at least 3 trajectory points, got " + std::to_string(n)) {}
    const char* kind() const override { return "TooFewPoints"; }
};

class IncompatibleResults : public Error {
public:
    explicit IncompatibleResults(const std::string& msg) : Error(msg) {}
    const char* kind() const override { return "IncompatibleResults"; }
};

// -- ingest ------------------------------------------------------------

class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
    const char* kind() const override { return "ParseError"; }
};

class SchemaMismatch : public Error {
public:
    explicit SchemaMismatch(const std::string& msg) : Error(msg) {}
    const char* kind() const override { return "SchemaMismatch"; }
};

class EmptyAfterFiltering : public Error {
public:
    EmptyAfterFiltering() : Error("no rows remain after dropping rows with missing values") {}
    const char* kind() const override { return "EmptyAfterFiltering"; }
};

class NonBinaryGroup : public Error {
public:
    explicit NonBinaryGroup(const std::string& msg) : Error(msg) {}
    const char* kind() const override { return "NonBinaryGroup"; }
};

class DuplicateAnnotation : public Error {
public:
    DuplicateAnnotation(int instance, int annotator)
        : Error("duplicate annotation for (instance " + std::to_string(instance) +
                ", annotator " + std::to_string(annotator) + ")") {}
    const char* kind() const override { return "DuplicateAnnotation"; }
};

class SpecInvalid : public Error {
public:
    explicit SpecInvalid(const std::string& msg) : Error(msg) {}
    const char* kind() const override { return "SpecInvalid"; }
};

}  // namespace albi
