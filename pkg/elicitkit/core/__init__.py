# Core 
