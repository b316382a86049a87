//! Fixed system instructions and in-context exemplars. These strings are
//! sent to models byte-for-byte; do not reflow them.

pub const ACT_SYSTEM: &str = "Predict the grounding label for the last response in the 'Input Dialogue:'. The label indicates whether the knowledge in the dialogue was accepted. Choose one of the following labels:
explicit: The response confirms understanding or acceptance (e.g., 'okay', 'thanks', 'alright', 'nice') without seeking clarification.
clarification: The response seeks clarification about a previous dialogue snippet.
implicit: The response moves the conversation forward without explicitly confirming or seeking clarification.";

/// (user, assistant) pairs: implicit, clarification, explicit.
pub const ACT_EXEMPLARS: [(&str, &str); 3] = [
    (
        "Input Dialogue:
seeker: Can you give me some information about your dataset?
provider: My dataset includes information on buildings of Gothic architecture.
seeker: How tall is the Cologne Cathedral?",
        "Output Label: implicit",
    ),
    (
        "Input Dialogue:
provider: Monitors have different attributes like size or panel technology.
provider: There are some with an aspect ratio of 21:9.
seeker: What is aspect ratio?",
        "Output Label: clarification",
    ),
    (
        "Input Dialogue:
provider: An elephant's average lifespan is around 65 years.
seeker: I see, good to know.",
        "Output Label: explicit",
    ),
];

pub const KNOWLEDGE_SYSTEM: &str = "Your task is to identify the knowledge items that have been grounded by the conversation partners in the 'Input Dialogue'. The items of mutually grounded knowledge must be explicitly mentioned in the dialogue. Based on the complete set of 'System Knowledge', your task is to generate the subset of knowledge items that have been grounded so far. Ensure that the output is a valid JSON-LD structure (an array of JSON objects) and only include knowledge items from the formatted 'System Knowledge'.";

/// (user, assistant) pairs: American presidents, Greek islands, Android smartphones.
pub const KNOWLEDGE_EXEMPLARS: [(&str, &str); 3] = [
    (
        r#"System Knowledge: [{"@context": ["http://www.w3.org/ns/csvw", {"schema": "http://schema.org"}], "@id": "http://example.org/american-presidents", "url": "american-presidents.csv", "schema:description": "The table contains information about American presidents", "tableSchema": {"columns": [{"name": "name", "datatype": "string"}, {"name": "term", "datatype": "string"}, {"name": "party", "datatype": "string"}, {"name": "election_year", "datatype": "integer"}]}, "primaryKey": "name"}, {"@type": "schema:Person", "name": "Barack Obama", "party": "Democratic"}]
Input Dialogue:
seeker: Can you give me an example entry from your dataset?
provider: One of the presidents in the list is Barack Obama.
seeker: Thanks. What party does he belong to?"#,
        r#"Output JSON-LD: [{"@context": ["http://www.w3.org/ns/csvw", {"schema": "http://schema.org"}], "@id": "http://example.org/american-presidents", "url": "american-presidents.csv", "schema:description": "The table contains information about American presidents", "tableSchema": {"columns": [{"name": "name", "datatype": "string"}]}, "primaryKey": "name"}, {"@type": "schema:Person", "name": "Barack Obama"}]"#,
    ),
    (
        r#"System Knowledge: [{"@context": ["http://www.w3.org/ns/csvw", {"schema": "http://schema.org"}], "@id": "http://example.org/greek-islands", "url": "greek-islands.csv", "schema:description": "The table contains information about islands in Greece", "tableSchema": {"columns": [{"name": "island", "datatype": "string"}, {"name": "area_in_km2", "datatype": "integer", "minimum": 64, "maximum": 8336}, {"name": "cluster", "datatype": "string"}]}, "primaryKey": "island"}, {"@type": "schema:Place", "island": "Crete", "area_in_km2": 8336, "cluster": "Cretan"}, {"@type": "schema:Place", "island": "Alonnisos", "area_in_km2": 64, "cluster": "Sporades"}, {"@type": "schema:Place", "island": "Lesbos", "area_in_km2": 1633, "cluster": "North Aegean Islands"}]
Input Dialogue:
provider: My dataset contains information on Greek islands. For example, there is Crete with an area of 8336 square kilometers.
provider: That makes it the largest island in Greece.
seeker: Which one is the smallest and what is its area?"#,
        r#"Output JSON-LD: [{"@context": ["http://www.w3.org/ns/csvw", {"schema": "http://schema.org"}], "@id": "http://example.org/greek-islands", "url": "greek-islands.csv", "schema:description": "The table contains information about islands in Greece", "tableSchema": {"columns": [{"name": "island", "datatype": "string"}, {"name": "area_in_km2", "datatype": "integer", "maximum": 8336}]}, "primaryKey": "island"}, {"@type": "schema:Place", "island": "Crete", "area_in_km2": 8336}]"#,
    ),
    (
        r#"System Knowledge: [{"@context": ["http://www.w3.org/ns/csvw", {"schema": "http://schema.org"}], "@id": "http://example.org/android-smartphones", "url": "android-smartphones.csv", "schema:description": "The table contains information about Android smartphones", "tableSchema": {"columns": [{"name": "model", "datatype": "string"}, {"name": "developer", "datatype": "string"}, {"name": "release_year", "datatype": "integer", "minimum": 2008, "maximum": 2024}, {"name": "android_version", "datatype": "string"}]}, "primaryKey": "model"}, {"@type": "schema:Product", "model": "HTC Dream", "developer:": "HTC", "release_year": "2008"}, {"@type": "schema:Product", "model": "LG Wing", "developer:": "LG", "release_year": "2020", "android_version": "Android 10"}, {"@type": "schema:Product", "release_year": "2024"}]
Input Dialogue:
provider: I can provide technical information about Android smartphones.
provider: One column contains data about the model and another specifies its release year.
seeker: I see, good to know."#,
        r#"Output JSON-LD: [{"@context": ["http://www.w3.org/ns/csvw", {"schema": "http://schema.org"}], "@id": "http://example.org/android-smartphones", "url": "android-smartphones.csv", "schema:description": "The table contains information about Android smartphones", "tableSchema": {"columns": [{"name": "model", "datatype": "string"}, {"name": "release_year", "datatype": "integer"}]}, "primaryKey": "model"}]"#,
    ),
];
