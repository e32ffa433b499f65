"""Common utility methods for the toolkit."""
import json
import os
from contextlib import contextmanager
from contextvars import ContextVar
from pathlib import Path
from typing import Any, Dict, Iterator, Optional

from dotenv import load_dotenv
from jproperties import Properties

from utils.app_constants import AppConstants
from utils.logger import Log


class AllureHelper:
    """Helper class for Allure reporting."""

    @staticmethod
    def before(message: str, name: str = "Test Info"):
        """
        Attach text information to Allure report before test execution.

        Args:
            message: The message to attach
            name: The attachment name (default: "Test Info")
        """
        try:
            import allure
            allure.attach(
                message,
                name=name,
                attachment_type=allure.attachment_type.TEXT
            )
        except ImportError:
            pass  # Allure not available, skip

    @staticmethod
    def after(message: str):
        """
        Attach test result to Allure report after test execution.

        Args:
            message: The result message to attach
        """
        AllureHelper.before(message, name="Test Result")

    @staticmethod
    def report(report: Dict[str, Any], name: str = "Report"):
        """Attach a JSON report to the Allure results."""
        AllureHelper.before(CommonMethods.dumps(report), name=name)


# Alias for consistent usage across the toolkit
allure = AllureHelper


class CommonMethods:
    """Common methods for configuration and report IO."""

    _env_loaded: bool = False
    _path_cap: ContextVar[Optional[int]] = ContextVar("path_cap", default=None)

    @staticmethod
    def init_prop(config_path: str = AppConstants.CONFIG_PATH) -> Dict[str, str]:
        """
        Initialize properties from config file.

        Args:
            config_path: Path to the .properties file

        Returns:
            Dict[str, str]: Properties dictionary
        """
        props = Properties()

        try:
            with open(config_path, 'rb') as config_file:
                props.load(config_file)

            props_dict = {}
            for key, value in props.items():
                props_dict[key] = value.data

            return props_dict
        except FileNotFoundError:
            Log.warn(f"Config file not found: {config_path}, using built-in defaults")
            return {}
        except Exception as e:
            Log.error(f"Error loading properties: {e}")
            return {}

    @staticmethod
    def load_env() -> None:
        """Load a .env file from the working directory once."""
        if not CommonMethods._env_loaded:
            load_dotenv()
            CommonMethods._env_loaded = True

    @staticmethod
    def path_cap(override: Optional[int] = None) -> int:
        """
        Resolve the path enumeration cap.

        Args:
            override: Explicit cap, wins over the environment

        Returns:
            int: The cap from the override, the active run, PIMSNER_PATH_CAP or the default
        """
        if override is not None:
            return int(override)
        scoped = CommonMethods._path_cap.get()
        if scoped is not None:
            return scoped
        CommonMethods.load_env()
        raw = os.getenv(AppConstants.ENV_PATH_CAP)
        if raw:
            try:
                return int(raw)
            except ValueError:
                Log.warn(f"Ignoring non-integer {AppConstants.ENV_PATH_CAP}={raw!r}")
        return AppConstants.PATH_CAP

    @staticmethod
    @contextmanager
    def scoped_path_cap(cap: int) -> Iterator[None]:
        """Use `cap` for every path enumeration inside the block."""
        token = CommonMethods._path_cap.set(int(cap))
        try:
            yield
        finally:
            CommonMethods._path_cap.reset(token)

    @staticmethod
    def read_text(path: str) -> str:
        """
        Read a UTF-8 input file.

        Args:
            path: File path

        Returns:
            str: File content
        """
        try:
            return Path(path).read_text(encoding="utf-8")
        except FileNotFoundError:
            Log.error(f"Input file not found: {path}")
            raise

    @staticmethod
    def dumps(report: Any) -> str:
        """Serialize a report deterministically."""
        return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @staticmethod
    def write_report(report: Any, out: Optional[str] = None) -> str:
        """
        Write a JSON report to a file or stdout.

        Args:
            report: JSON-compatible report
            out: Output path, stdout when None

        Returns:
            str: The serialized report
        """
        text = CommonMethods.dumps(report)
        if out:
            out_path = Path(out)
            if out_path.parent and not out_path.parent.exists():
                os.makedirs(out_path.parent)
            out_path.write_text(text, encoding="utf-8")
            Log.info(f"Report written: {out}")
        else:
            print(text, end="")
        return text
