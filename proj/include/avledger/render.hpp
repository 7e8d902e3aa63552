#ifndef AVLEDGER_RENDER_HPP
#define AVLEDGER_RENDER_HPP

#include "avledger/ledger.hpp"

#include <json.hpp>

namespace avl {

// nlohmann::json keeps object keys in a std::map, so dump() is key-sorted.
using Json = nlohmann::json;

Json to_json(const GeoPoint& p);
Json to_json(const EventSafetyMessage& m);
Json to_json(const TamperStoreDigest& d);
Json to_json(const EvidenceData& e);
Json to_json(const PseudonymCertificate& c);
Json to_json(const TxBody& body);
Json to_json(const Transaction& tx);
Json to_json(const ChainReport& report);

// Compact summary row used by `inspect`.
Json summary_json(const Transaction& tx);

}  // namespace avl

#endif
