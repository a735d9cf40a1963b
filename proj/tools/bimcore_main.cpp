// bimcore — representation-information registry, format identification, and
// OAIS packaging for digital building documents.
//
// Exit codes: 0 success, 1 domain error (validation or verification
// failure, missing records), 2 usage error.

#include "bimcore/errors.hpp"
#include "bimcore/ident.hpp"
#include "bimcore/json_io.hpp"
#include "bimcore/package.hpp"
#include "bimcore/service.hpp"
#include "bimcore/step.hpp"
#include "bimcore/store.hpp"
#include "bimcore/version.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace bimcore;

struct Options {
    CliConfig config;
    std::string actor = "cli";
    bool json = false;

    // subcommand arguments
    std::string path;
    std::string record_id;
    int version = 0;
    bool has_version = false;
    std::string out_dir;
    std::string aip_id;
    std::string sip_id;
    std::string dip_id;
    std::string format_filter;
    std::string view_name;
    std::string terms;
    std::vector<std::string> property_ids;
    std::vector<std::string> context_refs;
    std::vector<std::string> metadata_pairs;
};

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError("cannot read " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RegistryStore open_store(const Options& opt) {
    if (opt.config.store_root.empty())
        throw StoreError("no store configured; pass --store or set BIMCORE_STORE");
    return RegistryStore::open(opt.config.store_root);
}

std::vector<FormatSignature> signatures_for(const Options& opt) {
    if (opt.config.signature_file) return load_signature_file(*opt.config.signature_file);
    return builtin_signatures();
}

void emit(const Options& opt, const json& machine, const std::string& human) {
    if (opt.json)
        std::cout << canonical_dump(machine);
    else
        std::cout << human;
}

// ---------------------------------------------------------------------------
// record subcommands
// ---------------------------------------------------------------------------

int cmd_record_add(const Options& opt) {
    RegistryStore store = open_store(opt);
    const RIRecord record = parse_json(read_file_bytes(opt.path), opt.path).get<RIRecord>();
    try {
        const PutResult result = store.put_record(record, opt.actor);
        emit(opt, json{{"record_id", result.record_id}, {"version", result.version}},
             "stored " + result.record_id + " version " + std::to_string(result.version) + "\n");
        return 0;
    } catch (const ValidationFailure& e) {
        if (opt.json)
            std::cout << canonical_dump(json(e.report()));
        else
            for (const auto& v : e.report().violations) std::cerr << "violation: " << v.message << "\n";
        return 1;
    }
}

int cmd_record_get(const Options& opt) {
    const RegistryStore store = open_store(opt);
    const RIRecord record = store.get_record(
        opt.record_id, opt.has_version ? std::optional<int>(opt.version) : std::nullopt);
    std::cout << canonical_dump(json(record)); // records are JSON on the wire
    return 0;
}

int cmd_record_list(const Options& opt) {
    const RegistryStore store = open_store(opt);
    const auto summaries = store.list_records();
    std::string human;
    for (const auto& s : summaries)
        human += s.record_id + "  v" + std::to_string(s.version) + "  " + to_string(s.status) +
                 "  " + s.format_name + "\n";
    emit(opt, json(summaries), human);
    return 0;
}

int cmd_record_validate(const Options& opt) {
    const RIRecord record = parse_json(read_file_bytes(opt.path), opt.path).get<RIRecord>();
    std::set<std::string> existing;
    if (!opt.config.store_root.empty()) {
        const RegistryStore store = open_store(opt);
        for (const auto& id : store.record_ids()) existing.insert(id);
        existing.insert(record.record_id);
    }
    const ValidationReport report = validate_record(record, builtin_element_defs(), existing);
    std::string human = report.ok() ? "valid\n" : "";
    for (const auto& v : report.violations) {
        human += "violation";
        if (v.element_id) human += " (element " + std::to_string(*v.element_id) + ")";
        if (v.relation) human += " (" + to_string(v.relation->relation) + " -> " + v.relation->record_id + ")";
        human += ": " + v.message + "\n";
    }
    emit(opt, json(report), human);
    return report.ok() ? 0 : 1;
}

int cmd_record_export(const Options& opt) {
    const RegistryStore store = open_store(opt);
    const ExportManifest manifest = store.export_all(opt.out_dir);
    emit(opt, json(manifest),
         "exported " + std::to_string(manifest.record_versions) + " record versions, " +
             std::to_string(manifest.properties) + " properties, " +
             std::to_string(manifest.contexts) + " context entries\n");
    return 0;
}

int cmd_record_import(const Options& opt) {
    RegistryStore store = open_store(opt);
    const std::size_t count = store.import_all(opt.path);
    emit(opt, json{{"record_versions", count}},
         "imported " + std::to_string(count) + " record versions\n");
    return 0;
}

// ---------------------------------------------------------------------------
// identification
// ---------------------------------------------------------------------------

json identification_json(const std::string& path, const IdentificationResult& result,
                         const std::optional<StepHeader>& header) {
    json j(result);
    j["path"] = path;
    j["format"] = result.best() ? json(result.best()->signature_id) : json(nullptr);
    if (header)
        j["step_schema"] = header->file_schema.empty() ? json(nullptr)
                                                       : json(header->file_schema.front());
    return j;
}

int cmd_identify(const Options& opt) {
    const auto signatures = signatures_for(opt);
    const IdentificationResult result = identify_file(opt.path, signatures);

    std::optional<StepHeader> header;
    if (result.verdict == Verdict::Identified && result.best()->signature_id == "STEP-SPF") {
        try {
            header = parse_step_header(read_file_bytes(opt.path));
        } catch (const ParseError&) {
            // identification stands; header-level detail is best effort here
        }
    }

    std::string human = opt.path + ": " + to_string(result.verdict);
    if (result.best()) human += " " + result.best()->signature_id;
    if (header && !header->file_schema.empty()) human += " (" + header->file_schema.front() + ")";
    human += "\n";
    for (const auto& m : result.matches) {
        human += "  " + m.signature_id;
        if (!m.evidence.matched_ranges.empty()) {
            const auto& r = m.evidence.matched_ranges.front();
            human += "  magic @" + std::to_string(r.offset) + "+" + std::to_string(r.length);
        }
        if (m.evidence.extension_agreement) human += "  ext";
        if (!m.evidence.note.empty()) human += "  (" + m.evidence.note + ")";
        human += "\n";
    }
    for (const auto& w : result.warnings) human += "  warning: " + w + "\n";

    emit(opt, identification_json(opt.path, result, header), human);
    return 0;
}

std::string report_human(const VerificationReport& report) {
    std::string out;
    for (const auto& c : report.checks) {
        out += (c.passed ? "ok   " : "FAIL ") + c.check;
        if (c.offset) out += " @" + std::to_string(*c.offset);
        if (!c.detail.empty()) out += "  " + c.detail;
        out += "\n";
    }
    return out;
}

int cmd_verify_format(const Options& opt) {
    const std::string data = read_file_bytes(opt.path);
    const VerificationReport report = verify_step(data);
    emit(opt, json(report), report_human(report));
    return report.all_passed() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// packaging
// ---------------------------------------------------------------------------

int cmd_ingest(const Options& opt) {
    const RegistryStore store = open_store(opt);
    SubmissionPackage sip;
    sip.payload_root = opt.path;
    sip.sip_id = !opt.sip_id.empty()
                     ? opt.sip_id
                     : std::filesystem::path(opt.path).filename().string();
    for (const auto& ref : opt.context_refs) sip.declared_context.push_back({ref, std::nullopt});
    for (const auto& pair : opt.metadata_pairs) {
        const std::size_t eq = pair.find('=');
        if (eq == std::string::npos)
            throw ContractViolation("--meta expects key=value, got \"" + pair + "\"");
        sip.producer_metadata.emplace_back(pair.substr(0, eq), pair.substr(eq + 1));
    }

    IngestOptions ingest_options;
    ingest_options.aip_id = opt.aip_id;
    ingest_options.actor = opt.actor;
    const ArchivalPackage aip =
        ingest(sip, store, signatures_for(opt), opt.out_dir, ingest_options);

    std::size_t unresolved = 0;
    for (const auto& object : aip.content_information)
        if (object.unresolved_ri) ++unresolved;

    json j{{"aip_id", aip.aip_id},
           {"root", aip.root.string()},
           {"objects", aip.content_information},
           {"unresolved", unresolved}};
    std::string human = "AIP " + aip.aip_id + " written to " + aip.root.string() + "\n";
    for (const auto& object : aip.content_information) {
        human += "  " + object.path + ": ";
        human += object.identification.best() ? object.identification.best()->signature_id
                                              : "unknown";
        human += object.unresolved_ri ? "  [unresolved-RI]\n" : "\n";
    }
    emit(opt, j, human);
    return 0;
}

int cmd_aip_verify(const Options& opt) {
    const VerificationReport report = verify_aip(opt.path);
    emit(opt, json(report), report_human(report));
    return report.all_passed() ? 0 : 1;
}

int cmd_dip_build(const Options& opt) {
    const RegistryStore store = open_store(opt);
    const ObjectPredicate predicate =
        opt.format_filter.empty() ? select_all() : select_by_format(opt.format_filter);
    DipOptions dip_options;
    dip_options.dip_id = opt.dip_id;
    const DisseminationPackage dip =
        build_dip(opt.path, predicate, store, opt.out_dir, dip_options);
    json j{{"dip_id", dip.dip_id},
           {"source_aip_id", dip.source_aip_id},
           {"root", dip.root.string()},
           {"objects", dip.objects},
           {"ri_excerpts", dip.ri_excerpts}};
    std::string human = "DIP " + dip.dip_id + " (from " + dip.source_aip_id + ") with " +
                        std::to_string(dip.objects.size()) + " objects, " +
                        std::to_string(dip.ri_excerpts.size()) + " RI excerpts\n";
    emit(opt, j, human);
    return 0;
}

// ---------------------------------------------------------------------------
// significant properties
// ---------------------------------------------------------------------------

int cmd_sigprop_add(const Options& opt) {
    RegistryStore store = open_store(opt);
    const SignificantProperty property =
        parse_json(read_file_bytes(opt.path), opt.path).get<SignificantProperty>();
    store.put_property(property, opt.actor);
    emit(opt, json{{"property_id", property.property_id}},
         "stored significant property " + property.property_id + "\n");
    return 0;
}

int cmd_sigprop_get(const Options& opt) {
    const RegistryStore store = open_store(opt);
    std::cout << canonical_dump(json(store.get_property(opt.record_id)));
    return 0;
}

int cmd_sigprop_list(const Options& opt) {
    const RegistryStore store = open_store(opt);
    const auto properties = store.list_properties();
    std::string human;
    for (const auto& p : properties) human += p.property_id + "  " + p.name + "\n";
    emit(opt, json(properties), human);
    return 0;
}

int cmd_sigprop_attach(const Options& opt) {
    const RegistryStore store = open_store(opt);
    const ArchivalPackage aip =
        attach_significant_properties(opt.path, opt.property_ids, store);
    emit(opt,
         json{{"aip_id", aip.aip_id},
              {"significant_property_links", aip.significant_property_links}},
         "AIP " + aip.aip_id + " now links " +
             std::to_string(aip.significant_property_links.size()) +
             " significant properties\n");
    return 0;
}

// ---------------------------------------------------------------------------
// query / serve
// ---------------------------------------------------------------------------

int cmd_query(const Options& opt) {
    const RegistryStore store = open_store(opt);
    const QueryView view = QueryView::for_role(role_from_string(opt.view_name));
    const auto summaries = store.query(view, opt.terms);
    std::string human;
    for (const auto& s : summaries) {
        human += s.record_id + "  v" + std::to_string(s.version) + "  " + s.format_name +
                 "  elements";
        for (int id : s.matched_elements) human += " " + std::to_string(id);
        human += "\n";
    }
    emit(opt, json(summaries), human);
    return 0;
}

int cmd_serve(const Options& opt) {
    open_store(opt); // fail early
    const std::string address = opt.config.listen_address.value_or("127.0.0.1:8472");
    const std::size_t colon = address.rfind(':');
    if (colon == std::string::npos)
        throw ContractViolation("--listen expects host:port, got \"" + address + "\"");
    const std::string host = address.substr(0, colon);
    const int port = std::stoi(address.substr(colon + 1));

    QueryService service(opt.config.store_root);
    if (opt.config.log_level != "quiet")
        std::cerr << "serving read-only query endpoint on http://" << host << ":" << port << "\n";
    if (!service.listen(host, port)) throw StoreError("cannot listen on " + address);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    Options opt;

    CLI::App app{"representation-information registry and OAIS packaging for building documents",
                 "bimcore"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(bimcore::kToolName) + " " + bimcore::kVersion);
    app.add_option("--store", opt.config.store_root, "registry store root directory")
        ->envname("BIMCORE_STORE");
    std::string signature_file;
    app.add_option("--signatures", signature_file,
                   "JSON signature file extending the builtin set");
    app.add_option("--actor", opt.actor, "actor recorded in the audit log");
    app.add_flag("--json", opt.json, "machine-readable JSON output");
    app.add_option("--log-level", opt.config.log_level, "quiet|info|debug")
        ->check(CLI::IsMember({"quiet", "info", "debug"}));

    std::function<int(const Options&)> action;
    auto arm = [&action](CLI::App* cmd, int (*fn)(const Options&)) {
        cmd->fallthrough();
        cmd->callback([&action, fn] { action = fn; });
    };

    // record
    auto* record = app.add_subcommand("record", "curate registry records");
    record->require_subcommand(1);
    record->fallthrough();
    auto* record_add = record->add_subcommand("add", "store a record version from a JSON file");
    record_add->add_option("file", opt.path, "record JSON file")->required();
    arm(record_add, cmd_record_add);
    auto* record_get = record->add_subcommand("get", "print a record as canonical JSON");
    record_get->add_option("id", opt.record_id, "record id")->required();
    record_get->add_option("version", opt.version, "version (latest when omitted)")
        ->each([&opt](const std::string&) { opt.has_version = true; });
    arm(record_get, cmd_record_get);
    auto* record_list = record->add_subcommand("list", "list latest record versions");
    arm(record_list, cmd_record_list);
    auto* record_validate = record->add_subcommand("validate", "validate a record JSON file");
    record_validate->add_option("file", opt.path, "record JSON file")->required();
    arm(record_validate, cmd_record_validate);
    auto* record_export = record->add_subcommand("export", "export the store with checksums");
    record_export->add_option("dest", opt.out_dir, "destination directory")->required();
    arm(record_export, cmd_record_export);
    auto* record_import = record->add_subcommand("import", "import an exported store");
    record_import->add_option("src", opt.path, "export directory")->required();
    arm(record_import, cmd_record_import);

    // identification
    auto* identify = app.add_subcommand("identify", "identify the format of a file");
    identify->add_option("path", opt.path, "file to identify")->required();
    arm(identify, cmd_identify);

    auto* verify_format = app.add_subcommand("verify-format", "verify a STEP physical file");
    verify_format->add_option("path", opt.path, "file to verify")->required();
    arm(verify_format, cmd_verify_format);

    // packaging
    auto* ingest_cmd = app.add_subcommand("ingest", "convert a SIP directory into an AIP");
    ingest_cmd->add_option("sip-dir", opt.path, "SIP payload directory")->required();
    ingest_cmd->add_option("--out", opt.out_dir, "AIP output directory")->required();
    ingest_cmd->add_option("--aip-id", opt.aip_id, "AIP identifier");
    ingest_cmd->add_option("--sip-id", opt.sip_id, "SIP identifier (default: directory name)");
    ingest_cmd->add_option("--context-ref", opt.context_refs,
                           "declared context entry id (repeatable)");
    ingest_cmd->add_option("--meta", opt.metadata_pairs, "producer metadata key=value (repeatable)");
    arm(ingest_cmd, cmd_ingest);

    auto* aip = app.add_subcommand("aip", "archival package operations");
    aip->require_subcommand(1);
    aip->fallthrough();
    auto* aip_verify = aip->add_subcommand("verify", "verify fixity and completeness of an AIP");
    aip_verify->add_option("aip-dir", opt.path, "AIP directory")->required();
    arm(aip_verify, cmd_aip_verify);

    auto* dip = app.add_subcommand("dip", "dissemination package operations");
    dip->require_subcommand(1);
    dip->fallthrough();
    auto* dip_build = dip->add_subcommand("build", "export objects and RI excerpts from an AIP");
    dip_build->add_option("aip-dir", opt.path, "source AIP directory")->required();
    dip_build->add_option("--out", opt.out_dir, "DIP output directory")->required();
    dip_build->add_option("--dip-id", opt.dip_id, "DIP identifier");
    dip_build->add_option("--format", opt.format_filter,
                          "export only objects identified as this signature id");
    arm(dip_build, cmd_dip_build);

    // significant properties
    auto* sigprop = app.add_subcommand("sigprop", "significant property operations");
    sigprop->require_subcommand(1);
    sigprop->fallthrough();
    auto* sigprop_add = sigprop->add_subcommand("add", "store a significant property JSON file");
    sigprop_add->add_option("file", opt.path, "property JSON file")->required();
    arm(sigprop_add, cmd_sigprop_add);
    auto* sigprop_get = sigprop->add_subcommand("get", "print a significant property");
    sigprop_get->add_option("id", opt.record_id, "property id")->required();
    arm(sigprop_get, cmd_sigprop_get);
    auto* sigprop_list = sigprop->add_subcommand("list", "list significant properties");
    arm(sigprop_list, cmd_sigprop_list);
    auto* sigprop_attach = sigprop->add_subcommand("attach", "link properties into an AIP");
    sigprop_attach->add_option("aip-dir", opt.path, "AIP directory")->required();
    sigprop_attach->add_option("--property", opt.property_ids, "property id (repeatable)")
        ->required();
    arm(sigprop_attach, cmd_sigprop_attach);

    // query / serve
    auto* query = app.add_subcommand("query", "role-oriented registry query");
    query->add_option("--view", opt.view_name, "producer|consumer|archive-management|computer-expert|historian")
        ->required();
    query->add_option("-q,--terms", opt.terms, "text terms (all must match)");
    arm(query, cmd_query);

    auto* serve = app.add_subcommand("serve", "run the read-only HTTP query endpoint");
    std::string listen_address;
    serve->add_option("--listen", listen_address, "host:port (default 127.0.0.1:8472)");
    arm(serve, cmd_serve);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForVersion& e) {
        std::cout << e.what() << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            std::cout << app.help();
            return 0;
        }
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    if (!signature_file.empty()) opt.config.signature_file = signature_file;
    if (!listen_address.empty()) opt.config.listen_address = listen_address;

    try {
        return action(opt);
    } catch (const ValidationFailure& e) {
        if (opt.json) std::cout << canonical_dump(json(e.report()));
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        if (opt.json) std::cout << canonical_dump(json{{"error", e.what()}});
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
