use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use boycott_registry::{router, FilePersistence, Registry, RegistryConfig, Store};
use clap::Parser;

/// Serve the campaign registry over HTTP.
#[derive(Parser)]
#[command(name = "registryd", version)]
struct Args {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Listen address; overrides the config file.
    #[arg(long)]
    listen: Option<String>,
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    let mut config = match &args.config {
        Some(path) => match RegistryConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("registryd: {e}");
                return ExitCode::from(2);
            }
        },
        None => RegistryConfig::default(),
    };
    if let Some(listen) = args.listen {
        config.listen = listen;
    }
    let store = match &config.data_file {
        Some(path) => Store::open(Box::new(FilePersistence::new(path))),
        None => Ok(Store::memory()),
    };
    let store = match store {
        Ok(s) => s,
        Err(e) => {
            eprintln!("registryd: {e}");
            return ExitCode::from(2);
        }
    };
    let listen = config.listen.clone();
    let app = router(Arc::new(Registry::new(store, config)));
    let listener = match tokio::net::TcpListener::bind(&listen).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("registryd: cannot listen on {listen}: {e}");
            return ExitCode::from(2);
        }
    };
    eprintln!("registryd: listening on {listen}");
    if let Err(e) = axum::serve(listener, app).await {
        eprintln!("registryd: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
