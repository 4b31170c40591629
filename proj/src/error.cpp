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

#include "gbpa/error.hpp"

namespace gbpa {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MissingField: return "MissingField";
    case Errc::BadUnit: return "BadUnit";
    case Errc::BadTimestamp: return "BadTimestamp";
    case Errc::BadQuantity: return "BadQuantity";
    case Errc::BadDuration: return "BadDuration";
    case Errc::BadStatus: return "BadStatus";
    case Errc::Io: return "Io";
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::DuplicateNodeId: return "DuplicateNodeId";
    case Errc::DanglingEdge: return "DanglingEdge";
    case Errc::UnknownAgentKind: return "UnknownAgentKind";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::UnrecognizedIntent: return "UnrecognizedIntent";
    case Errc::MissingEntity: return "MissingEntity";
    case Errc::NoTemplate: return "NoTemplate";
    case Errc::UnboundPlaceholder: return "UnboundPlaceholder";
    case Errc::PlanningFailed: return "PlanningFailed";
    case Errc::TicketNotFound: return "TicketNotFound";
    case Errc::AlreadyResolved: return "AlreadyResolved";
    case Errc::UnknownRun: return "UnknownRun";
    case Errc::WriteConflict: return "WriteConflict";
    case Errc::UnboundAgent: return "UnboundAgent";
    case Errc::InvalidDecision: return "InvalidDecision";
    case Errc::ExtractionFailed: return "ExtractionFailed";
    case Errc::UnknownRole: return "UnknownRole";
    case Errc::NonNumericField: return "NonNumericField";
    case Errc::EndpointDown: return "EndpointDown";
    case Errc::InsufficientFunds: return "InsufficientFunds";
    case Errc::UnknownEndpoint: return "UnknownEndpoint";
    case Errc::UnknownAccount: return "UnknownAccount";
    case Errc::InvalidRule: return "InvalidRule";
    case Errc::CorrelationKeyMissing: return "CorrelationKeyMissing";
    case Errc::MissingDuration: return "MissingDuration";
    case Errc::ScenarioAssetsMissing: return "ScenarioAssetsMissing";
    case Errc::ScenarioMismatch: return "ScenarioMismatch";
  }
  return "Unknown";
}

namespace {

std::string compose(Errc code, const std::string& subject, const std::string& detail) {
  std::string msg(errc_name(code));
  if (!subject.empty()) msg += "(" + subject + ")";
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

}  // namespace

Error::Error(Errc code, std::string subject, const std::string& detail)
    : std::runtime_error(compose(code, subject, detail)), code_(code), subject_(std::move(subject)) {}

}  // namespace gbpa
