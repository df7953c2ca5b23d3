// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include "narrmap/corpus.hpp"
#include "narrmap/extraction.hpp"
#include "narrmap/session.hpp"
#include "narrmap/structure.hpp"

namespace narrmap {

nlohmann::json to_json(const ExtractionParams& p);
ExtractionParams params_from_json(const nlohmann::json& j, ExtractionParams defaults = {});

nlohmann::json to_json(const InteractionEvent& e);
InteractionEvent event_from_json(const nlohmann::json& j);

nlohmann::json ledger_summary(const ConstraintLedger& ledger);

/// The map interchange document (see docs/map_schema.md).
nlohmann::json map_to_json(const NarrativeMap& map, const Corpus& corpus, const Layout& layout);
nlohmann::json layout_to_json(const Layout& layout);
nlohmann::json diff_to_json(const MapDiff& diff);
nlohmann::json document_to_json(const Document& d);

/// Stable textual form used for files and digests.
std::string dump_stable(const nlohmann::json& j);

}  // namespace narrmap
