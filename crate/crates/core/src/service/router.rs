use std::collections::HashMap;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{ApiError, Service};

/// A status code and a JSON body.
#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub status: u16,
    pub body: serde_json::Value,
}

impl Reply {
    fn ok<T: Serialize>(status: u16, v: &T) -> Self {
        Reply {
            status,
            body: serde_json::to_value(v).expect("response serializes"),
        }
    }

    fn error(e: &ApiError) -> Self {
        Self::ok(e.status, e)
    }
}

/// Field named by a serde error such as "missing field `cast`".
fn serde_field(message: &str) -> Option<String> {
    let start = message.find("field `")? + 7;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| {
        let msg = e.to_string();
        let err = ApiError::bad_request(format!("invalid request body: {msg}"));
        match serde_field(&msg) {
            Some(f) => err.field(f),
            None => err,
        }
    })
}

fn reply<T: Serialize>(r: Result<T, ApiError>) -> Reply {
    match r {
        Ok(v) => Reply::ok(200, &v),
        Err(e) => Reply::error(&e),
    }
}

pub const ROUTES: [(&str, &str); 6] = [
    ("GET", "/healthz"),
    ("GET", "/v1/model"),
    ("GET", "/v1/persons"),
    ("POST", "/v1/predict"),
    ("POST", "/v1/whatif"),
    ("POST", "/v1/explain"),
];

impl Service {
    /// Routes one request. `params` holds decoded query parameters.
    pub fn handle(&self, method: &str, path: &str, params: &HashMap<String, String>, body: &[u8]) -> Reply {
        let path = path.trim_end_matches('/');
        let path = if path.is_empty() { "/" } else { path };
        if !ROUTES.iter().any(|(_, p)| *p == path) {
            return Reply::error(&ApiError::not_found("not_found", format!("no route {path}")));
        }
        if !ROUTES.contains(&(method, path)) {
            return Reply::error(&ApiError::new(
                405,
                "method_not_allowed",
                format!("{method} not allowed on {path}"),
            ));
        }
        match path {
            "/healthz" => {
                let (status, h) = self.healthz();
                Reply::ok(status, &h)
            }
            "/v1/model" => reply(self.model_info()),
            "/v1/persons" => reply(self.persons(params.get("q").map(String::as_str).unwrap_or(""))),
            "/v1/predict" => reply(parse(body).and_then(|r| self.predict(&r))),
            "/v1/whatif" => reply(parse(body).and_then(|r| self.whatif(&r))),
            "/v1/explain" => reply(parse(body).and_then(|r| self.explain(&r))),
            _ => unreachable!("route table checked above"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serde_field_extraction() {
        assert_eq!(serde_field("missing field `cast` at line 1"), Some("cast".into()));
        assert_eq!(serde_field("expected value"), None);
    }

    #[test]
    fn unloaded_service_answers_503_and_routes_errors() {
        let s = Service::new();
        let none = HashMap::new();
        assert_eq!(s.handle("GET", "/healthz", &none, b"").status, 503);
        let r = s.handle("GET", "/v1/model", &none, b"");
        assert_eq!(r.status, 503);
        assert_eq!(r.body["code"], "not_loaded");
        assert_eq!(s.handle("GET", "/nope", &none, b"").status, 404);
        assert_eq!(s.handle("GET", "/v1/predict", &none, b"").status, 405);
        let bad = s.handle(
            "POST",
            "/v1/predict",
            &none,
            b"{\"genres\":[\"Drama\"],\"rating\":\"R\"}",
        );
        assert_eq!(bad.status, 400);
        assert_eq!(bad.body["field"], "cast");
    }
}
