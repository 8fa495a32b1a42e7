//! HTTP transport over [`Service::handle`].

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::Router;
use log::{error, info};
use mias_core::service::Service;
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use crate::commands::load_service_state;
use crate::config::Config;
use crate::error::{CliError, ExitCode};

async fn dispatch(
    State(service): State<Arc<Service>>,
    method: Method,
    uri: Uri,
    Query(params): Query<HashMap<String, String>>,
    body: Bytes,
) -> Response {
    let path = uri.path().to_string();
    let method = method.as_str().to_string();
    let reply = tokio::task::spawn_blocking(move || service.handle(&method, &path, &params, &body)).await;
    match reply {
        Ok(r) => {
            let status = StatusCode::from_u16(r.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            let mut resp = (status, r.body.to_string()).into_response();
            resp.headers_mut()
                .insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
            resp
        }
        Err(e) => {
            error!("request handler panicked: {e}");
            (StatusCode::INTERNAL_SERVER_ERROR, "{\"code\":\"internal\"}").into_response()
        }
    }
}

/// The application router with CORS for the given origin.
pub fn router(service: Arc<Service>, cors_origin: &str) -> Router {
    let origin = if cors_origin == "*" {
        AllowOrigin::any()
    } else {
        match HeaderValue::from_str(cors_origin) {
            Ok(v) => AllowOrigin::exact(v),
            Err(_) => AllowOrigin::any(),
        }
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers(Any);
    Router::new().fallback(dispatch).with_state(service).layer(cors)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    info!("shutting down");
}

/// Binds, then loads models in the background while `/healthz` reports loading.
pub async fn serve(config: Config) -> Result<(), CliError> {
    let bind = config.serve.bind.clone();
    let addr: SocketAddr = bind
        .parse()
        .map_err(|e| CliError::new(ExitCode::General, format!("invalid bind address '{bind}': {e}")))?;
    let listener = TcpListener::bind(addr).await.map_err(|e| {
        let code = if e.kind() == std::io::ErrorKind::AddrInUse {
            ExitCode::PortInUse
        } else {
            ExitCode::General
        };
        CliError::new(code, format!("cannot bind {addr}: {e}"))
    })?;
    info!(
        "listening on {}",
        listener.local_addr().map(|a| a.to_string()).unwrap_or(bind)
    );

    let service = Arc::new(Service::new());
    let app = router(service.clone(), &config.serve.cors_origin);
    let (fail_tx, fail_rx) = tokio::sync::oneshot::channel::<CliError>();
    let loader = service.clone();
    tokio::task::spawn_blocking(move || match load_service_state(&config) {
        Ok(state) => {
            loader.install(state);
            info!("models loaded");
        }
        Err(e) => {
            let _ = fail_tx.send(e);
        }
    });

    let failed = Arc::new(std::sync::Mutex::new(None));
    let slot = failed.clone();
    let shutdown = async move {
        tokio::select! {
            _ = shutdown_signal() => {},
            r = fail_rx => {
                if let Ok(e) = r {
                    *slot.lock().expect("failure slot") = Some(e);
                } else {
                    shutdown_signal().await;
                }
            }
        }
    };
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| CliError::new(ExitCode::General, format!("server error: {e}")))?;
    let failure = failed.lock().expect("failure slot").take();
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
