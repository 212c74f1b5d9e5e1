#include <string>
#include <string_view>
#include <unordered_map>

#include "hierfed/data/dataset.hpp"
#include "hierfed/errors.hpp"

namespace hierfed::data {

namespace {

enum class Region { AS, AF, EU, NA, SA, Oceania, Antarctica };

// ISO-3166 alpha-2 -> continent.
const std::unordered_map<std::string_view, Region>& country_table() {
    static const std::unordered_map<std::string_view, Region> table = [] {
        std::unordered_map<std::string_view, Region> t;
        auto add = [&t](Region r, std::initializer_list<std::string_view> codes) {
            for (auto c : codes) t.emplace(c, r);
        };
        add(Region::AF, {"DZ", "AO", "BJ", "BW", "BF", "BI", "CV", "CM", "CF", "TD", "KM", "CG",
                         "CD", "CI", "DJ", "EG", "GQ", "ER", "SZ", "ET", "GA", "GM", "GH", "GN",
                         "GW", "KE", "LS", "LR", "LY", "MG", "MW", "ML", "MR", "MU", "YT", "MA",
                         "MZ", "NE", "NG", "RE", "RW", "SH", "ST", "SN", "SC", "SL", "SO", "ZA",
                         "SS", "SD", "TZ", "TG", "TN", "UG", "EH", "ZM", "ZW"});
        add(Region::AS, {"AM", "AZ", "BH", "BD", "BT", "BN", "KH", "CN", "CY", "GE", "HK", "IN",
                         "ID", "IR", "IQ", "IL", "JP", "JO", "KZ", "KW", "KG", "LA", "LB", "MO",
                         "MY", "MV", "MN", "MM", "NP", "KP", "OM", "PK", "PS", "PH", "QA", "SG",
                         "KR", "LK", "SY", "TW", "TJ", "TH", "TL", "TR", "TM", "AE", "UZ", "VN",
                         "YE", "IO"});
        add(Region::EU, {"AX", "AL", "AD", "AT", "BY", "BE", "BA", "BG", "HR", "CZ", "DK", "EE",
                         "FO", "FI", "FR", "DE", "GI", "GR", "GG", "VA", "HU", "IS", "IE", "IM",
                         "IT", "JE", "XK", "LV", "LI", "LT", "LU", "MT", "MD", "MC", "ME", "NL",
                         "MK", "NO", "PL", "PT", "RO", "RU", "SM", "RS", "SK", "SI", "ES", "SJ",
                         "SE", "CH", "UA", "GB"});
        add(Region::NA, {"AI", "AG", "AW", "BS", "BB", "BZ", "BM", "BQ", "VG", "CA", "KY", "CR",
                         "CU", "CW", "DM", "DO", "SV", "GL", "GD", "GP", "GT", "HT", "HN", "JM",
                         "MQ", "MX", "MS", "NI", "PA", "PR", "BL", "KN", "LC", "MF", "PM", "VC",
                         "SX", "TT", "TC", "US", "VI"});
        add(Region::SA, {"AR", "BO", "BR", "CL", "CO", "EC", "FK", "GF", "GY", "PY", "PE", "SR",
                         "UY", "VE"});
        add(Region::Oceania, {"AU", "CK", "FJ", "PF", "GU", "KI", "MH", "FM", "NR", "NC", "NZ",
                              "NU", "NF", "MP", "PW", "PG", "PN", "WS", "SB", "TK", "TO", "TV",
                              "UM", "VU", "WF"});
        add(Region::Antarctica, {"AQ", "BV", "GS", "HM", "TF"});
        return t;
    }();
    return table;
}

}  // namespace

Continent parse_continent(const std::string& s) {
    if (s == "AS") return Continent::AS;
    if (s == "AF") return Continent::AF;
    if (s == "EU") return Continent::EU;
    if (s == "NA") return Continent::NA;
    if (s == "SA") return Continent::SA;
    const auto& table = country_table();
    auto it = table.find(s);
    if (it == table.end()) throw DataError("unknown continent or country code '" + s + "'");
    switch (it->second) {
        case Region::AS: return Continent::AS;
        case Region::AF: return Continent::AF;
        case Region::EU: return Continent::EU;
        case Region::NA: return Continent::NA;
        case Region::SA: return Continent::SA;
        case Region::Oceania:
            throw DataError("country '" + s + "' is in Oceania, which has no continent subgroup");
        case Region::Antarctica:
            throw DataError("country '" + s + "' is in Antarctica, which has no continent subgroup");
    }
    throw DataError("unmapped country '" + s + "'");
}

}  // namespace hierfed::data
