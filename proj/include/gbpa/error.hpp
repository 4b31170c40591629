/*
Copyright 2026 The GBPA Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gbpa {

enum class Errc {
  // event model
  MissingField,
  BadUnit,
  BadTimestamp,
  BadQuantity,
  BadDuration,
  BadStatus,
  Io,
  // process spec
  CycleDetected,
  DuplicateNodeId,
  DanglingEdge,
  UnknownAgentKind,
  InvalidSpec,
  // planner
  UnrecognizedIntent,
  MissingEntity,
  NoTemplate,
  UnboundPlaceholder,
  PlanningFailed,
  // engine
  TicketNotFound,
  AlreadyResolved,
  UnknownRun,
  WriteConflict,
  UnboundAgent,
  InvalidDecision,
  // agents
  ExtractionFailed,
  UnknownRole,
  NonNumericField,
  EndpointDown,
  InsufficientFunds,
  UnknownEndpoint,
  UnknownAccount,
  InvalidRule,
  // optimizer
  CorrelationKeyMissing,
  MissingDuration,
  // simulation
  ScenarioAssetsMissing,
  ScenarioMismatch,
};

std::string_view errc_name(Errc code) noexcept;

// Single exception type for the library; `subject` carries the offending
// facet, node id, entity name, etc.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string subject, const std::string& detail = {});

  Errc code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  Errc code_;
  std::string subject_;
};

}  // namespace gbpa
